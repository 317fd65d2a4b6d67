#include "bbm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "bbm/errors.hpp"
#include "bbm/function_registry.hpp"

namespace bbm::experiments {
namespace {

constexpr double kTimeTolerance = 1e-9;

const std::vector<std::pair<StatKind, const char*>>& kind_names() {
  static const std::vector<std::pair<StatKind, const char*>> names{
      {StatKind::kCount, "n"},
      {StatKind::kLineages, "lineages"},
      {StatKind::kAliveDuring, "alive_during"},
      {StatKind::kAdditive, "W"},
      {StatKind::kDerivative, "Z"},
      {StatKind::kFunctional, "Wf"},
      {StatKind::kGrowth, "V"},
      {StatKind::kMax, "M"},
      {StatKind::kExtremalCount, "extremal"},
      {StatKind::kOverlap, "overlap"},
      {StatKind::kPairs, "pairs"},
      {StatKind::kParticleSum, "sum"},
      {StatKind::kBarrierExcess, "barrier"},
  };
  return names;
}

bool needs_genealogy(StatKind kind) {
  return kind == StatKind::kLineages || kind == StatKind::kAliveDuring ||
         kind == StatKind::kOverlap || kind == StatKind::kPairs;
}

bool contains_time(const std::vector<double>& times, double t) {
  return std::any_of(times.begin(), times.end(), [&](double s) {
    return std::abs(s - t) <= kTimeTolerance * std::max(1.0, std::abs(t));
  });
}

std::string format_number(double x) {
  std::ostringstream out;
  out.precision(10);
  out << x;
  return out.str();
}

}  // namespace

std::string to_string(StatKind kind) {
  for (const auto& [k, name] : kind_names()) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<StatKind> stat_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kind_names()) {
    if (name == n) return k;
  }
  return std::nullopt;
}

std::string StatKey::label() const {
  std::ostringstream out;
  out << to_string(kind) << '(';
  switch (kind) {
    case StatKind::kCount:
    case StatKind::kMax:
      out << "t=" << format_number(t);
      break;
    case StatKind::kLineages:
    case StatKind::kAliveDuring:
      out << "s=" << format_number(s) << ",t=" << format_number(t);
      break;
    case StatKind::kAdditive:
    case StatKind::kDerivative:
      out << "beta=" << format_number(beta) << ",t=" << format_number(t);
      break;
    case StatKind::kFunctional:
    case StatKind::kGrowth:
      out << "beta=" << format_number(beta) << ",f=" << function_id
          << ",t=" << format_number(t);
      break;
    case StatKind::kExtremalCount:
      out << "x=" << format_number(level) << ",t=" << format_number(t);
      break;
    case StatKind::kOverlap:
      out << "beta=" << format_number(beta) << ",a=" << format_number(a)
          << ",t=" << format_number(t);
      break;
    case StatKind::kPairs:
    case StatKind::kParticleSum:
      out << "f=" << function_id << ",t=" << format_number(t);
      break;
    case StatKind::kBarrierExcess:
      out << "slope=" << format_number(kBetaCritical);
      break;
  }
  out << ')';
  return out.str();
}

std::vector<double> ExperimentConfig::required_snapshot_times() const {
  std::vector<double> out;
  auto add = [&](double t) {
    if (!contains_time(out, t)) out.push_back(t);
  };
  const bool wants_snapshot_stats = std::any_of(
      compute.begin(), compute.end(), [](StatKind k) {
        return k != StatKind::kLineages && k != StatKind::kAliveDuring &&
               k != StatKind::kBarrierExcess;
      });
  if (wants_snapshot_stats) {
    for (const double t : times) add(t);
  }
  if (std::find(compute.begin(), compute.end(), StatKind::kOverlap) !=
      compute.end()) {
    for (const double t : times) {
      for (const double a : a_grid) add(a * t);
    }
  }
  if (fluctuation) {
    add(fluctuation->t);
    add(fluctuation->t + fluctuation->gap);
  }
  if (overlap) {
    for (const double t : overlap->times) {
      add(t);
      add(overlap->a * t);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void ExperimentConfig::validate() const {
  if (replications < 1) {
    throw ConfigError("experiment.replications: R must be >= 1");
  }
  try {
    sim.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("simulation: ") + e.what());
  }
  for (const double t : times) {
    if (!(t >= 0.0) || t > sim.horizon) {
      throw ConfigError("statistics.times: " + format_number(t) +
                        " outside [0, horizon]");
    }
  }
  for (const double a : a_grid) {
    if (!(a > 0.0 && a < 1.0)) {
      throw ConfigError("statistics.a: " + format_number(a) +
                        " outside (0, 1)");
    }
  }
  for (const double b : betas) {
    if (!(b >= 0.0) || !std::isfinite(b)) {
      throw ConfigError("statistics.betas: " + format_number(b) +
                        " must be finite and >= 0");
    }
  }
  for (const auto& [s, t] : intervals) {
    if (!(s >= 0.0 && s <= t && t <= sim.horizon)) {
      throw ConfigError("statistics.intervals: [" + format_number(s) + "," +
                        format_number(t) + "] must satisfy 0 <= s <= t <= horizon");
    }
  }
  for (const auto* ids : {&functions, &pair_functions, &sum_functions}) {
    for (const auto& id : *ids) parse_function(id);
  }
  for (const StatKind k : compute) {
    if (needs_genealogy(k) && !sim.retain_genealogy) {
      throw ConfigError("statistics.compute: '" + to_string(k) +
                        "' needs simulation.retain_genealogy = true");
    }
  }
  if (overlap) {
    if (!(overlap->a > 0.0 && overlap->a < 1.0)) {
      throw ConfigError("overlap.a must lie in (0, 1)");
    }
    if (overlap->times.size() < 2) {
      throw ConfigError("overlap.times needs at least two horizons");
    }
    if (!sim.retain_genealogy) {
      throw ConfigError("overlap: needs simulation.retain_genealogy = true");
    }
  }
  if (fluctuation) {
    if (!(fluctuation->t > 0.0) || !(fluctuation->gap > 0.0)) {
      throw ConfigError("fluctuation.t and fluctuation.gap must be > 0");
    }
  }
  for (const double t : required_snapshot_times()) {
    if (!contains_time(sim.snapshot_times, t)) {
      throw ConfigError("simulation.snapshots: missing snapshot at t = " +
                        format_number(t) +
                        " (required by the statistic grid)");
    }
  }
}

std::vector<StatKey> ExperimentConfig::stat_keys() const {
  std::vector<StatKey> keys;
  for (const StatKind kind : compute) {
    switch (kind) {
      case StatKind::kCount:
      case StatKind::kMax:
        for (const double t : times) keys.push_back(StatKey::of(kind, t));
        break;
      case StatKind::kLineages:
      case StatKind::kAliveDuring:
        for (const auto& [s, t] : intervals) {
          StatKey k = StatKey::of(kind, t);
          k.s = s;
          keys.push_back(k);
        }
        break;
      case StatKind::kAdditive:
      case StatKind::kDerivative:
        for (const double b : betas) {
          for (const double t : times) {
            StatKey k = StatKey::of(kind, t);
            k.beta = b;
            keys.push_back(k);
          }
        }
        break;
      case StatKind::kFunctional:
      case StatKind::kGrowth:
        for (const double b : betas) {
          for (const auto& f : functions) {
            for (const double t : times) {
              StatKey k = StatKey::of(kind, t);
              k.beta = b;
              k.function_id = f;
              keys.push_back(k);
            }
          }
        }
        break;
      case StatKind::kExtremalCount:
        for (const double x : extremal_levels) {
          for (const double t : times) {
            StatKey k = StatKey::of(kind, t);
            k.level = x;
            keys.push_back(k);
          }
        }
        break;
      case StatKind::kOverlap:
        for (const double b : betas) {
          for (const double a : a_grid) {
            for (const double t : times) {
              StatKey k = StatKey::of(kind, t);
              k.beta = b;
              k.a = a;
              keys.push_back(k);
            }
          }
        }
        break;
      case StatKind::kPairs:
      case StatKind::kParticleSum:
        for (const auto& f : kind == StatKind::kPairs ? pair_functions
                                                      : sum_functions) {
          for (const double t : times) {
            StatKey k = StatKey::of(kind, t);
            k.function_id = f;
            keys.push_back(k);
          }
        }
        break;
      case StatKind::kBarrierExcess:
        keys.push_back(StatKey::of(kind, sim.horizon));
        break;
    }
  }
  return keys;
}

namespace {

double evaluate(const StatKey& key, const Realization& real,
                const stats::ScalarFunction& f) {
  const double nan = std::nan("");
  switch (key.kind) {
    case StatKind::kCount:
      return static_cast<double>(alive_at(real, key.t).size());
    case StatKind::kLineages:
      return stats::lineage_count(real, key.s, key.t);
    case StatKind::kAliveDuring:
      return stats::particles_alive_during(real, key.s, key.t);
    case StatKind::kAdditive:
      return stats::additive_martingale(alive_at(real, key.t), key.beta);
    case StatKind::kDerivative:
      return stats::derivative_martingale(alive_at(real, key.t), key.beta);
    case StatKind::kFunctional:
      if (key.t <= 0.0) return nan;
      return stats::functional_martingale(alive_at(real, key.t), key.beta, f);
    case StatKind::kGrowth:
      return stats::growth_statistic(alive_at(real, key.t), key.beta, f);
    case StatKind::kMax: {
      const Snapshot& snap = alive_at(real, key.t);
      return snap.empty() ? nan : stats::max_displacement(snap);
    }
    case StatKind::kExtremalCount:
      return static_cast<double>(
          stats::extremal_count(alive_at(real, key.t), key.level));
    case StatKind::kOverlap:
      return stats::overlap_mass(real, key.beta, key.t, key.a);
    case StatKind::kPairs:
      return stats::death_functional(real, key.t, f);
    case StatKind::kParticleSum:
      return stats::particle_sum(alive_at(real, key.t), f);
    case StatKind::kBarrierExcess:
      return stats::running_max_excess(real, kBetaCritical);
  }
  return nan;
}

}  // namespace

ReplicationResult run_replication(const ExperimentConfig& cfg,
                                  const std::vector<StatKey>& keys,
                                  std::uint64_t replication) {
  RngStream rng(cfg.master_seed, replication);
  const Realization real = simulate(cfg.sim, rng);
  ReplicationResult out;
  out.survived = real.survived();
  out.truncated = real.truncated();
  out.particles = real.particle_count();
  out.values.assign(keys.size(), std::nan(""));
  if (out.truncated) return out;

  std::map<std::string, NamedFunction> functions;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const StatKey& key = keys[i];
    stats::ScalarFunction f;
    if (!key.function_id.empty()) {
      auto it = functions.find(key.function_id);
      if (it == functions.end()) {
        it = functions.emplace(key.function_id, parse_function(key.function_id))
                 .first;
      }
      f = it->second.fn;
    }
    out.values[i] = evaluate(key, real, f);
  }
  return out;
}

unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t)>& job) {
  workers = std::max(1u, std::min<unsigned>(
                             resolve_workers(workers),
                             static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

const StatColumn* EnsembleSummary::find(const StatKey& key) const {
  const std::string label = key.label();
  for (const StatColumn& c : columns) {
    if (c.label == label) return &c;
  }
  return nullptr;
}

const StatColumn& EnsembleSummary::require(const StatKey& key) const {
  if (const StatColumn* c = find(key)) return *c;
  throw ConfigError("missing statistic " + key.label() +
                    " (add it to the statistics grid)");
}

EnsembleSummary run_ensemble(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<StatKey> keys = cfg.stat_keys();
  std::vector<ReplicationResult> results(cfg.replications);
  parallel_for(cfg.replications, cfg.workers, [&](std::size_t r) {
    results[r] = run_replication(cfg, keys, r);
  });

  EnsembleSummary summary;
  summary.config = cfg;
  summary.replications = cfg.replications;
  summary.survived_flags.reserve(cfg.replications);
  summary.columns.reserve(keys.size());
  for (const StatKey& key : keys) {
    StatColumn col;
    col.key = key;
    col.label = key.label();
    col.samples.reserve(cfg.replications);
    summary.columns.push_back(std::move(col));
  }
  for (const ReplicationResult& r : results) {
    summary.truncated += r.truncated ? 1 : 0;
    summary.survived += (r.survived && !r.truncated) ? 1 : 0;
    summary.survived_flags.push_back(r.survived && !r.truncated);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      summary.columns[i].samples.push_back(r.values[i]);
    }
  }
  for (StatColumn& col : summary.columns) {
    col.summary = stat::summarize(col.samples);
  }
  return summary;
}

std::string to_string(VerdictStatus status) {
  switch (status) {
    case VerdictStatus::kPass:
      return "pass";
    case VerdictStatus::kFail:
      return "fail";
    case VerdictStatus::kInconclusive:
      return "inconclusive";
  }
  return "unknown";
}

Verdict mean_verdict(std::string check, std::string claim, double expected,
                     double measured, double se, double k) {
  Verdict v;
  v.check = std::move(check);
  v.claim = std::move(claim);
  v.expected = expected;
  v.measured = measured;
  v.std_error = se;
  v.threshold = k * se;
  if (!std::isfinite(measured) || !std::isfinite(se)) {
    v.status = VerdictStatus::kInconclusive;
    v.detail = "measurement undefined";
  } else {
    v.status = std::abs(measured - expected) <= v.threshold
                   ? VerdictStatus::kPass
                   : VerdictStatus::kFail;
    std::ostringstream d;
    d.precision(4);
    d << "|diff|/se = " << (se > 0.0 ? std::abs(measured - expected) / se
                                     : (measured == expected ? 0.0 : INFINITY));
    v.detail = d.str();
  }
  return v;
}

}  // namespace bbm::experiments
