#include "bbm/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

namespace bbm {

void SimConfig::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ValidationError("sim config: horizon must be finite and > 0");
  }
  for (std::size_t i = 0; i < snapshot_times.size(); ++i) {
    const double s = snapshot_times[i];
    if (!(s >= 0.0 && s <= horizon)) {
      std::ostringstream msg;
      msg << "sim config: snapshot time " << s << " outside [0, " << horizon
          << "]";
      throw ValidationError(msg.str());
    }
    if (i > 0 && !(snapshot_times[i - 1] < s)) {
      throw ValidationError(
          "sim config: snapshot_times must be strictly increasing");
    }
  }
  if (particle_cap < 1) {
    throw ValidationError("sim config: particle_cap must be >= 1");
  }
  if (barrier && (!std::isfinite(barrier->slope) ||
                  !std::isfinite(barrier->offset))) {
    throw ValidationError("sim config: barrier slope/offset must be finite");
  }
}

namespace {

struct Pending {
  ParticleIndex index;
  std::uint32_t rank;
  ParticleIndex parent;
  std::uint32_t next_snapshot;
  double birth_time;
  double birth_position;
};

}  // namespace

Realization simulate(const SimConfig& config, RngStream& rng) {
  config.validate();

  Realization real;
  real.horizon_ = config.horizon;
  const std::vector<double>& times = config.snapshot_times;
  const auto n_snap = static_cast<std::uint32_t>(times.size());
  real.snapshots_.resize(n_snap);
  for (std::uint32_t j = 0; j < n_snap; ++j) real.snapshots_[j].time = times[j];

  const double horizon = config.horizon;
  const std::uint64_t cap = config.particle_cap;
  const bool retain = config.retain_genealogy;
  const OffspringDistribution& offspring = config.offspring;
  const std::optional<Barrier> barrier = config.barrier;

  boost::random::exponential_distribution<double> exp1;
  boost::random::normal_distribution<double> std_normal;
  auto lifetime = [&] {
    double x;
    do {
      x = exp1(rng);
    } while (!(x > 0.0));
    return x;
  };
  auto above_barrier = [&](double t, double x) {
    return barrier && x > barrier->slope * t + barrier->offset;
  };

  std::vector<ParticleRecord>& arena = real.particles_;
  if (retain) arena.emplace_back();

  std::vector<Pending> stack;
  stack.push_back({0, 0, kNoParent, 0, 0.0, 0.0});
  std::uint64_t created = 1;
  std::uint64_t alive_at_horizon = 0;
  double last_death = 0.0;

  while (!stack.empty() && !real.truncated_) {
    const Pending p = stack.back();
    stack.pop_back();

    double death = p.birth_time + lifetime();
    double t = p.birth_time;
    double x = p.birth_position;
    bool killed = false;

    std::uint32_t j = p.next_snapshot;
    for (; j < n_snap && times[j] < death; ++j) {
      x += std::sqrt(times[j] - t) * std_normal(rng);
      t = times[j];
      if (above_barrier(t, x)) {
        killed = true;
        death = t;
        break;
      }
      Snapshot& snap = real.snapshots_[j];
      snap.entries.push_back({p.index, x});
      if (snap.entries.size() > cap) real.truncated_ = true;
    }

    int children = 0;
    if (!killed) {
      const double end = std::min(death, horizon);
      if (end > t) x += std::sqrt(end - t) * std_normal(rng);
      t = end;
      if (death > horizon) {
        death = std::numeric_limits<double>::infinity();
        children = -1;
        if (++alive_at_horizon > cap) real.truncated_ = true;
      } else if (above_barrier(death, x)) {
        killed = true;
      } else {
        children = sample_offspring(offspring, rng);
      }
    }
    if (children <= 0 && std::isfinite(death)) {
      last_death = std::max(last_death, death);
    }

    ParticleIndex first_child = 0;
    if (children > 0) {
      first_child = static_cast<ParticleIndex>(retain ? arena.size() : created);
      created += static_cast<std::uint64_t>(children);
      if (retain) {
        for (int k = 1; k <= children; ++k) {
          ParticleRecord child;
          child.parent = p.index;
          child.rank = static_cast<std::uint32_t>(k);
          child.birth_time = death;
          child.birth_position = x;
          arena.push_back(child);
        }
      }
      // Reverse push so rank 1 is expanded first.
      for (int k = children; k >= 1; --k) {
        stack.push_back({first_child + static_cast<ParticleIndex>(k - 1),
                         static_cast<std::uint32_t>(k), p.index, j, death, x});
      }
    }

    if (retain) {
      ParticleRecord& rec = arena[p.index];
      rec.death_time = death;
      rec.death_position = x;
      rec.child_count = children;
      rec.first_child = first_child;
      rec.killed = killed;
    }
  }

  real.particle_count_ = created;
  if (!real.truncated_ && alive_at_horizon == 0) real.extinct_at_ = last_death;
  return real;
}

const ParticleRecord& Realization::particle(ParticleIndex u) const {
  if (u >= particles_.size()) {
    std::ostringstream msg;
    msg << "particle index " << u << " out of range (" << particles_.size()
        << " particles";
    if (particles_.empty()) msg << "; genealogy was not retained";
    msg << ")";
    throw ArgumentError(msg.str());
  }
  return particles_[u];
}

std::vector<std::uint32_t> Realization::label(ParticleIndex u) const {
  std::vector<std::uint32_t> path;
  for (ParticleIndex v = u; particle(v).parent != kNoParent;
       v = particles_[v].parent) {
    path.push_back(particles_[v].rank);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::string Realization::label_string(ParticleIndex u) const {
  std::string out;
  for (const std::uint32_t r : label(u)) {
    if (!out.empty()) out += '.';
    out += std::to_string(r);
  }
  return out;
}

const Snapshot& alive_at(const Realization& real, double t) {
  const auto& snaps = real.snapshots();
  auto it = std::lower_bound(
      snaps.begin(), snaps.end(), t,
      [](const Snapshot& s, double value) { return s.time < value; });
  const double tol = 1e-9 * std::max(1.0, std::abs(t));
  for (auto cand : {it, it == snaps.begin() ? it : std::prev(it)}) {
    if (cand != snaps.end() && std::abs(cand->time - t) <= tol) return *cand;
  }
  std::ostringstream msg;
  msg << "no snapshot recorded at t = " << t
      << " (positions at undeclared times cannot be reconstructed)";
  throw LookupError(msg.str());
}

ParticleIndex ancestor_at(const Realization& real, ParticleIndex u, double s) {
  const ParticleRecord& rec = real.particle(u);
  if (!(s >= 0.0) || !(s < rec.death_time)) {
    std::ostringstream msg;
    msg << "ancestor_at: s = " << s << " is not within [0, d_u) for particle "
        << u;
    throw ArgumentError(msg.str());
  }
  const auto& arena = real.particles();
  ParticleIndex v = u;
  while (arena[v].birth_time > s) v = arena[v].parent;
  return v;
}

namespace {

std::size_t depth_of(const std::vector<ParticleRecord>& arena,
                     ParticleIndex u) {
  std::size_t d = 0;
  for (; arena[u].parent != kNoParent; u = arena[u].parent) ++d;
  return d;
}

}  // namespace

double lca_death_time(const Realization& real, ParticleIndex u,
                      ParticleIndex v) {
  real.particle(u);
  real.particle(v);
  if (u == v) {
    throw ArgumentError("lca_death_time: u and v must differ");
  }
  // The common ancestor is the node reached by the longest common prefix
  // of the two labels; lift the deeper node to equal depth, then climb both.
  const auto& arena = real.particles();
  std::size_t du = depth_of(arena, u);
  std::size_t dv = depth_of(arena, v);
  for (; du > dv; --du) u = arena[u].parent;
  for (; dv > du; --dv) v = arena[v].parent;
  while (u != v) {
    u = arena[u].parent;
    v = arena[v].parent;
  }
  return arena[u].death_time;
}

}  // namespace bbm
