#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bbm/rng.hpp"
#include "bbm/sampling.hpp"

namespace bbm {

using ParticleIndex = std::uint32_t;
inline constexpr ParticleIndex kNoParent =
    std::numeric_limits<ParticleIndex>::max();

/// One node of the genealogy.
///
/// The Ulam-Harris label is not stored; it is the chain of `rank` values
/// from the root down (see Realization::label). Children of a particle
/// occupy the contiguous index range [first_child, first_child + child_count)
/// and always have larger indices than their parent.
struct ParticleRecord {
  ParticleIndex parent = kNoParent;
  std::uint32_t rank = 0;  // 1-based position among siblings; 0 for the root
  double birth_time = 0.0;
  /// +inf while alive at the horizon.
  double death_time = std::numeric_limits<double>::infinity();
  double birth_position = 0.0;
  /// Position at death, or at the horizon for particles still alive.
  double death_position = 0.0;
  ParticleIndex first_child = 0;
  /// -1 when alive at the horizon (no offspring drawn yet).
  std::int32_t child_count = -1;
  /// Removed by the barrier rather than by branching.
  bool killed = false;

  bool alive_at_horizon() const noexcept { return child_count < 0; }
  bool alive_at(double t) const noexcept {
    return birth_time <= t && t < death_time;
  }
};

struct SnapshotEntry {
  ParticleIndex particle;
  double position;
};

/// The alive population N(t) with positions X_u(t), in depth-first order.
///
/// Depth-first order places the descendants of any particle alive at an
/// earlier snapshot in one contiguous run.
struct Snapshot {
  double time = 0.0;
  std::vector<SnapshotEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }
};

/// Kill line x = slope·t + offset, checked at snapshot times and at death.
struct Barrier {
  double slope;
  double offset;
};

struct SimConfig {
  static constexpr std::uint64_t kDefaultParticleCap = 5'000'000;

  double horizon = 1.0;
  std::vector<double> snapshot_times;
  OffspringDistribution offspring = OffspringDistribution::binary();
  std::uint64_t particle_cap = kDefaultParticleCap;
  std::optional<Barrier> barrier;
  /// When false only snapshots are kept; particle indices in snapshot
  /// entries are then creation ordinals with no arena behind them, and
  /// genealogical queries are unavailable.
  bool retain_genealogy = true;

  /// Throws ValidationError.
  void validate() const;
};

class Realization {
 public:
  const std::vector<ParticleRecord>& particles() const noexcept {
    return particles_;
  }
  const std::vector<Snapshot>& snapshots() const noexcept {
    return snapshots_;
  }
  std::optional<double> extinct_at() const noexcept { return extinct_at_; }
  bool survived() const noexcept { return !extinct_at_.has_value(); }
  bool truncated() const noexcept { return truncated_; }
  bool has_genealogy() const noexcept { return !particles_.empty(); }
  double horizon() const noexcept { return horizon_; }
  /// Total number of particles created, including those not retained.
  std::uint64_t particle_count() const noexcept { return particle_count_; }

  /// Ulam-Harris label, root = empty.
  std::vector<std::uint32_t> label(ParticleIndex u) const;
  /// Dot-separated label; the root prints as an empty string.
  std::string label_string(ParticleIndex u) const;

  const ParticleRecord& particle(ParticleIndex u) const;

 private:
  friend Realization simulate(const SimConfig&, RngStream&);

  std::vector<ParticleRecord> particles_;
  std::vector<Snapshot> snapshots_;
  std::optional<double> extinct_at_;
  bool truncated_ = false;
  double horizon_ = 0.0;
  std::uint64_t particle_count_ = 0;
};

/// Exact event-driven simulation.
///
/// Particles are expanded depth-first: each receives an Exp(1) lifetime,
/// Gaussian increments between the snapshot times inside its life and then
/// to its death, and at death its offspring at the death position. Each
/// particle's randomness is independent of all others given its birth, so
/// the traversal order does not affect the law; it fixes the draw order and
/// therefore bit-reproducibility. If the alive count at any snapshot time or
/// at the horizon exceeds `particle_cap`, the run stops and the partial
/// realization is flagged truncated.
Realization simulate(const SimConfig& config, RngStream& rng);

/// Stored snapshot at a declared time. Throws LookupError otherwise.
const Snapshot& alive_at(const Realization& real, double t);

/// The ancestor v of u (possibly u itself) with b_v <= s < d_v.
ParticleIndex ancestor_at(const Realization& real, ParticleIndex u, double s);

/// Death time of the most recent common ancestor of u != v.
double lca_death_time(const Realization& real, ParticleIndex u,
                      ParticleIndex v);

/// Tab-separated dump. Particle table columns:
///   index label parent birth_time death_time birth_position death_position
///   child_count killed
/// Snapshot table columns:
///   time particle position
/// `parent` and `child_count` print as -1 when absent, `death_time` as inf.
void write_particles(std::ostream& out, const Realization& real);
void write_snapshots(std::ostream& out, const Realization& real);

}  // namespace bbm
