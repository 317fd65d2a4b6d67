#include "bbm/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "bbm/log_sum_exp.hpp"

namespace bbm::stats {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const Realization& require_genealogy(const Realization& real,
                                     const char* what) {
  if (!real.has_genealogy()) {
    throw ArgumentError(std::string(what) +
                        ": realization was simulated without genealogy");
  }
  return real;
}

}  // namespace

BetaGrid::BetaGrid(std::vector<double> values) : values_(std::move(values)) {
  for (const double b : values_) {
    if (!std::isfinite(b) || b < 0.0) {
      throw ValidationError("beta grid: values must be finite and >= 0");
    }
  }
  std::sort(values_.begin(), values_.end());
  if (std::adjacent_find(values_.begin(), values_.end()) != values_.end()) {
    throw ValidationError("beta grid: duplicate beta");
  }
}

double log_partition_sum(const Snapshot& snap, double beta) {
  LogSumExp lse;
  for (const SnapshotEntry& e : snap.entries) lse.add(beta * e.position);
  return lse.log();
}

double additive_martingale(const Snapshot& snap, double beta) {
  if (snap.empty()) return 0.0;
  return std::exp(log_partition_sum(snap, beta) -
                  growth_exponent(beta) * snap.time);
}

double derivative_martingale(const Snapshot& snap, double beta) {
  SignedLogSum sum;
  const double shift = beta * snap.time;
  for (const SnapshotEntry& e : snap.entries) {
    sum.add(e.position - shift, beta * e.position);
  }
  return snap.empty() ? 0.0 : sum.value(-growth_exponent(beta) * snap.time);
}

double derivative_martingale_magnitude(const Snapshot& snap, double beta) {
  SignedLogSum sum;
  const double shift = beta * snap.time;
  for (const SnapshotEntry& e : snap.entries) {
    sum.add(e.position - shift, beta * e.position);
  }
  return snap.empty() ? 0.0
                      : sum.magnitude(-growth_exponent(beta) * snap.time);
}

double functional_martingale(const Snapshot& snap, double beta,
                             const ScalarFunction& f) {
  const double t = snap.time;
  if (!(t > 0.0)) {
    throw ArgumentError(
        "functional_martingale: t must be > 0 (positions are standardized by "
        "sqrt(t))");
  }
  const double root_t = std::sqrt(t);
  SignedLogSum sum;
  for (const SnapshotEntry& e : snap.entries) {
    sum.add(f((e.position - beta * t) / root_t), beta * e.position);
  }
  return snap.empty() ? 0.0 : sum.value(-growth_exponent(beta) * t);
}

double growth_statistic(const Snapshot& snap, double beta,
                        const ScalarFunction& f) {
  const double t = snap.time;
  double sum = 0.0;
  for (const SnapshotEntry& e : snap.entries) sum += f(e.position - beta * t);
  if (sum == 0.0) return 0.0;
  return std::sqrt(t) * std::exp(-(1.0 - 0.5 * beta * beta) * t) * sum;
}

double max_displacement(const Snapshot& snap) {
  if (snap.empty()) {
    throw UndefinedValueError("max_displacement: snapshot is empty");
  }
  double m = -std::numeric_limits<double>::infinity();
  for (const SnapshotEntry& e : snap.entries) m = std::max(m, e.position);
  return m;
}

double centering(double t) {
  if (!(t > 0.0)) throw ArgumentError("centering: t must be > 0");
  return std::numbers::sqrt2 * t -
         3.0 / (2.0 * std::numbers::sqrt2) * std::log(t);
}

std::size_t extremal_count(const Snapshot& snap, double x) {
  const double level = centering(snap.time) + x;
  return static_cast<std::size_t>(
      std::count_if(snap.entries.begin(), snap.entries.end(),
                    [level](const SnapshotEntry& e) {
                      return e.position >= level;
                    }));
}

double particle_sum(const Snapshot& snap, const ScalarFunction& f) {
  double sum = 0.0;
  for (const SnapshotEntry& e : snap.entries) sum += f(e.position);
  return sum;
}

double overlap_mass(const Realization& real, double beta, double t,
                    double a) {
  require_genealogy(real, "overlap_mass");
  if (!(a > 0.0 && a < 1.0)) {
    throw ArgumentError("overlap_mass: a must lie in (0, 1)");
  }
  const Snapshot& late = alive_at(real, t);
  const Snapshot& early = alive_at(real, a * t);
  if (late.empty()) return kNaN;

  // Group slots follow the early snapshot's entry order.
  std::unordered_map<ParticleIndex, std::size_t> slot_of;
  slot_of.reserve(early.size());
  for (std::size_t i = 0; i < early.size(); ++i) {
    slot_of.emplace(early.entries[i].particle, i);
  }
  std::vector<LogSumExp> groups(early.size());
  LogSumExp total;
  const double split = a * t;
  for (const SnapshotEntry& e : late.entries) {
    const ParticleIndex anc = ancestor_at(real, e.particle, split);
    const double log_w = beta * e.position;
    groups[slot_of.at(anc)].add(log_w);
    total.add(log_w);
  }
  LogSumExp squared;
  for (const LogSumExp& g : groups) {
    if (!g.empty()) squared.add(2.0 * g.log());
  }
  return std::exp(squared.log() - 2.0 * total.log());
}

std::vector<double> overlap_cdf(const Realization& real, double beta,
                                double t, std::span<const double> a_grid) {
  if (!std::is_sorted(a_grid.begin(), a_grid.end())) {
    throw ArgumentError("overlap_cdf: a_grid must be sorted");
  }
  std::vector<double> out;
  out.reserve(a_grid.size());
  for (const double a : a_grid) out.push_back(overlap_mass(real, beta, t, a));
  return out;
}

double overlap_diagonal(const Snapshot& snap, double beta) {
  if (snap.empty()) return kNaN;
  LogSumExp diag;
  for (const SnapshotEntry& e : snap.entries) diag.add(2.0 * beta * e.position);
  return std::exp(diag.log() - 2.0 * log_partition_sum(snap, beta));
}

double normalized_pair_functional(const Realization& real, double beta,
                                  double t, const ScalarFunction& g) {
  require_genealogy(real, "normalized_pair_functional");
  const Snapshot& snap = alive_at(real, t);
  if (snap.empty()) return kNaN;
  const auto& arena = real.particles();

  // Subtree weight sums in log space. Children have larger indices than
  // their parent, so a descending sweep sees every child first.
  std::vector<LogSumExp> subtree(arena.size());
  for (const SnapshotEntry& e : snap.entries) {
    subtree[e.particle].add(beta * e.position);
  }
  SignedLogSum pairs;
  std::vector<double> child_logs;
  for (std::size_t i = arena.size(); i-- > 0;) {
    const ParticleRecord& r = arena[i];
    if (r.child_count <= 0 || r.death_time > t) continue;
    child_logs.clear();
    for (int k = 0; k < r.child_count; ++k) {
      const LogSumExp& c = subtree[r.first_child + static_cast<ParticleIndex>(k)];
      if (!c.empty()) child_logs.push_back(c.log());
      subtree[i].merge(c);
    }
    if (child_logs.size() < 2) continue;
    // Ordered pairs across distinct children: 2 Σ_{i<j} S_i S_j.
    LogSumExp cross;
    for (std::size_t p = 0; p < child_logs.size(); ++p) {
      for (std::size_t q = p + 1; q < child_logs.size(); ++q) {
        cross.add(std::numbers::ln2 + child_logs[p] + child_logs[q]);
      }
    }
    pairs.add(g(r.death_time), cross.log());
  }
  return pairs.value(-2.0 * log_partition_sum(snap, beta));
}

double overlap_total_mass(const Realization& real, double beta, double t) {
  const Snapshot& snap = alive_at(real, t);
  return overlap_diagonal(snap, beta) +
         normalized_pair_functional(real, beta, t,
                                    [](double) { return 1.0; });
}

double death_functional(const Realization& real, double t,
                        const ScalarFunction& f) {
  require_genealogy(real, "death_functional");
  const auto& arena = real.particles();
  std::vector<double> alive_below(arena.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = arena.size(); i-- > 0;) {
    const ParticleRecord& r = arena[i];
    if (r.birth_time > t) continue;
    if (r.alive_at(t)) {
      alive_below[i] = 1.0;
      continue;
    }
    if (r.child_count <= 0) continue;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int k = 0; k < r.child_count; ++k) {
      const double n = alive_below[r.first_child + static_cast<ParticleIndex>(k)];
      sum += n;
      sum_sq += n * n;
    }
    alive_below[i] = sum;
    const double ordered_pairs = sum * sum - sum_sq;
    if (ordered_pairs > 0.0) total += f(r.death_time) * ordered_pairs;
  }
  return total;
}

double lineage_count(const Realization& real, double s, double t) {
  require_genealogy(real, "lineage_count");
  if (!(s <= t)) throw ArgumentError("lineage_count: need s <= t");
  double count = 0.0;
  for (const ParticleRecord& r : real.particles()) {
    if (r.alive_at(t)) {
      count += 1.0;
    } else if (r.child_count == 0 && r.death_time > s && r.death_time <= t) {
      count += 1.0;
    }
  }
  return count;
}

double particles_alive_during(const Realization& real, double s, double t) {
  require_genealogy(real, "particles_alive_during");
  if (!(s <= t)) throw ArgumentError("particles_alive_during: need s <= t");
  double count = 0.0;
  for (const ParticleRecord& r : real.particles()) {
    if (r.birth_time <= t && r.death_time > s) count += 1.0;
  }
  return count;
}

double running_max_excess(const Realization& real, double slope) {
  double best = -std::numeric_limits<double>::infinity();
  for (const Snapshot& snap : real.snapshots()) {
    const double line = slope * snap.time;
    for (const SnapshotEntry& e : snap.entries) {
      best = std::max(best, e.position - line);
    }
  }
  return best;
}

void StatisticSeries::push(double t, double value) {
  times.push_back(t);
  values.push_back(value);
  undefined.push_back(std::isnan(value));
}

void write_series_header(std::ostream& out) {
  out << "replication\tstatistic\tbeta\ta\tt\tvalue\tsurvived\n";
}

void write_series_rows(std::ostream& out, std::size_t replication,
                       const StatisticSeries& series, bool survived) {
  std::ostringstream name;
  name << series.name;
  if (!series.function_id.empty()) name << '[' << series.function_id << ']';
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    out << replication << '\t' << name.str() << '\t' << series.beta << '\t'
        << series.a << '\t' << series.times[i] << '\t';
    if (series.undefined[i]) {
      out << "nan";
    } else {
      out << series.values[i];
    }
    out << '\t' << (survived ? 1 : 0) << '\n';
  }
  out.precision(old);
}

}  // namespace bbm::stats
