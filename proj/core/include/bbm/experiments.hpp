#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bbm/limits.hpp"
#include "bbm/simulation.hpp"
#include "bbm/stat_tests.hpp"
#include "bbm/statistics.hpp"

namespace bbm::experiments {

enum class StatKind {
  kCount,          // n(t)
  kLineages,       // n([s,t]), lineage convention
  kAliveDuring,    // Ulam-Harris nodes alive during [s,t]
  kAdditive,       // W_t(β)
  kDerivative,     // Z_t(β)
  kFunctional,     // W_t(β, f)
  kGrowth,         // V_t(β, f)
  kMax,            // M(t)
  kExtremalCount,  // E_t([x, ∞))
  kOverlap,        // ν_{β,t}([a,1])
  kPairs,          // Σ_{u≠v} f(d_{u∧v})
  kParticleSum,    // Σ_u F(X_u(t))
  kBarrierExcess,  // sup over snapshots of max_u X_u(t) - √2 t
};

/// Short config/table name: n, lineages, alive_during, W, Z, Wf, V, M,
/// extremal, overlap, pairs, sum, barrier.
std::string to_string(StatKind kind);
std::optional<StatKind> stat_kind_from_string(std::string_view name);

struct StatKey {
  StatKind kind = StatKind::kCount;
  double t = 0.0;
  double s = 0.0;       // interval start for kLineages / kAliveDuring
  double beta = 0.0;
  double a = 0.0;
  double level = 0.0;   // x for kExtremalCount
  std::string function_id;

  static StatKey of(StatKind kind, double t) {
    StatKey k;
    k.kind = kind;
    k.t = t;
    return k;
  }

  /// Canonical label, e.g. "W(beta=0.5,t=2)". Unique per key.
  std::string label() const;
};

struct TestSettings {
  double se_multiplier = 4.0;
  double significance = 0.01;
  /// Monte Carlo sample count of independent Brownian oracles.
  std::size_t oracle_samples = 1'000'000;
  double quadrature_tolerance = 1e-9;
  std::size_t min_survivors = 100;
  /// Relative tolerance of asymptotic-limit checks at finite t.
  double relative_tolerance = 0.10;
};

/// A named check to run on the ensemble summary. `args` carry the check's
/// knobs (function ids, β values, barrier levels).
struct CheckRequest {
  std::string name;
  std::vector<std::string> args;
};

/// User-specified expected mean for a statistic label; compared at the
/// configured SE multiplier.
struct ExpectedMean {
  std::string label;
  double value;
};

struct FluctuationSettings {
  double beta = 0.5;
  double t = 6.0;
  double gap = 8.0;  // Δ: W_∞ proxy is W_{t+Δ}
  std::vector<double> hill_fractions{0.005, 0.01, 0.02};
  double hill_tolerance = 0.25;
};

struct OverlapDecaySettings {
  double beta = 0.5;
  double a = 0.5;
  std::vector<double> times{4.0, 6.0, 8.0};
  double slope_tolerance = 0.20;  // relative
  std::vector<double> hill_fractions{0.005, 0.01, 0.02};
  double hill_tolerance = 0.25;
};

struct ExperimentConfig {
  std::string name = "experiment";
  SimConfig sim;
  std::size_t replications = 1;
  std::uint64_t master_seed = 1;
  unsigned workers = 0;  // 0 = hardware concurrency

  // Statistic grid.
  std::vector<double> times;
  std::vector<double> betas;
  std::vector<double> a_grid;
  std::vector<std::string> functions;       // for Wf and V
  std::vector<std::string> pair_functions;  // for pairs
  std::vector<std::string> sum_functions;   // for sum
  std::vector<std::pair<double, double>> intervals;  // for lineages
  std::vector<double> extremal_levels;
  std::vector<StatKind> compute;

  TestSettings tests;
  std::vector<CheckRequest> checks;
  std::vector<ExpectedMean> expectations;
  std::optional<FluctuationSettings> fluctuation;
  std::optional<OverlapDecaySettings> overlap;

  std::filesystem::path output_dir;
  bool write_replications = false;

  /// Snapshot times every requested statistic needs.
  std::vector<double> required_snapshot_times() const;

  /// Checks R >= 1, the simulation config, and that every required time
  /// (including each a·t) is a declared snapshot time. Throws ConfigError
  /// naming the offending field or time.
  void validate() const;

  /// Enumerates the statistic keys computed per replication.
  std::vector<StatKey> stat_keys() const;
};

/// Per-replication statistic values, aligned with a key list. Truncated
/// replications carry NaN everywhere.
struct ReplicationResult {
  std::vector<double> values;
  bool survived = false;
  bool truncated = false;
  std::uint64_t particles = 0;
};

ReplicationResult run_replication(const ExperimentConfig& cfg,
                                  const std::vector<StatKey>& keys,
                                  std::uint64_t replication);

/// Runs `count` jobs on `workers` threads; job i writes slot i only.
void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t)>& job);

unsigned resolve_workers(unsigned requested);

struct StatColumn {
  StatKey key;
  std::string label;
  std::vector<double> samples;  // one per replication, NaN if excluded
  stat::Summary summary;
};

struct EnsembleSummary {
  ExperimentConfig config;
  std::size_t replications = 0;
  std::size_t truncated = 0;
  std::size_t survived = 0;
  std::vector<bool> survived_flags;
  std::vector<StatColumn> columns;

  /// nullptr when absent.
  const StatColumn* find(const StatKey& key) const;
  /// Throws ConfigError ("missing statistic ...") when absent.
  const StatColumn& require(const StatKey& key) const;
};

/// R independent replications on streams (master_seed, 0..R-1), folded in
/// replication order so the result does not depend on the worker count.
EnsembleSummary run_ensemble(const ExperimentConfig& cfg);

enum class VerdictStatus { kPass, kFail, kInconclusive };
std::string to_string(VerdictStatus status);

/// Auditable outcome: both numbers, the standard error, and the threshold
/// that was applied.
struct Verdict {
  std::string check;
  std::string claim;
  double expected = 0.0;
  double measured = 0.0;
  double std_error = 0.0;
  double threshold = 0.0;
  VerdictStatus status = VerdictStatus::kInconclusive;
  std::string detail;
};

/// |measured - expected| <= k·se.
Verdict mean_verdict(std::string check, std::string claim, double expected,
                     double measured, double se, double k);

/// (i) mean n(t) vs e^t per grid t, (ii) lineage counts vs
/// e^t + μ(0)(e^t - e^s), (iii) for binary branching a chi-square fit of
/// n(t) to Geometric(e^{-t}) at each grid t.
std::vector<Verdict> check_population_moments(const EnsembleSummary& summary);

/// Mean of Σ_{u∈N(t)} F(X_u(t)) vs e^t · E F(B_t), the latter from an
/// independent Brownian Monte Carlo on its own stream.
std::vector<Verdict> check_many_to_one(const EnsembleSummary& summary,
                                       const std::string& function_id);

/// Mean of Σ_{u≠v} f(d_{u∧v}) vs K e^{2t} ∫_0^t f(s) e^{-s} ds (adaptive
/// Gauss-Kronrod). Throws NumericError if the quadrature misses tolerance.
std::vector<Verdict> check_death_functional(const EnsembleSummary& summary,
                                            const std::string& function_id);

/// e^{-(1-β²)t} + K ∫_0^t e^{-(1-β²)s} ds.
double second_moment_closed_form(double beta, double t, double K);

/// Mean W_t(β)² vs the closed form. β >= 1 is allowed with a warning in the
/// verdict detail.
std::vector<Verdict> check_second_moment(const EnsembleSummary& summary,
                                         double beta);

/// P(some snapshot particle above √2 t + L) <= e^{-√2 L} + k·SE. Vacuous
/// bounds (>= 1) are inconclusive.
Verdict check_barrier_bound(const EnsembleSummary& summary, double level);

/// (i) corr(√t W_t(√2), √(2/π) Z_t(√2)) > 0.9 at the largest grid time,
/// (ii) IQR(M(t) - m(t)) / IQR at the first grid time within [0.67, 1.5],
/// (iii) median M(t)/t increasing over the grid.
std::vector<Verdict> check_critical_scaling(const EnsembleSummary& summary);

/// Mean W_t(β) = 1 and, where computed, mean Z_t(β) = 0 at every grid point.
std::vector<Verdict> check_martingale(const EnsembleSummary& summary);

/// Mean W_t(β, f) against ∫ f(x) e^{-x²/2}/√(2π) dx, relative tolerance.
std::vector<Verdict> check_functional_limit(const EnsembleSummary& summary);

/// Mean V_t(β, f) against ∫ f(x) e^{-βx}/√(2π) dx, relative tolerance.
std::vector<Verdict> check_growth_limit(const EnsembleSummary& summary);

/// Mean ensemble checks for user-specified expectations.
std::vector<Verdict> check_expectations(const EnsembleSummary& summary);

/// Runs every check listed in cfg.checks plus cfg.expectations.
std::vector<Verdict> run_checks(const EnsembleSummary& summary);

struct FluctuationReport {
  limits::FluctuationSpec spec;
  std::size_t replications = 0;
  std::size_t used = 0;
  std::vector<double> rescaled;      // rate·(W_{t+Δ} - W_t)
  std::vector<double> standardized;  // Gaussian regimes only
  std::optional<stat::TestResult> ks;
  std::optional<stat::TestResult> anderson_darling;
  std::vector<limits::HillSensitivity> hill;
  std::vector<Verdict> verdicts;
};

/// Fluctuations of W_t(β) around the proxy W_{t+Δ}(β), standardized by the
/// limiting variance evaluated at the time-t proxy of W_∞(2β) or Z_∞.
/// Uses cfg.fluctuation for (β, t, Δ) and cfg.replications / master_seed /
/// sim.offspring.
FluctuationReport fluctuation_experiment(const ExperimentConfig& cfg);

struct OverlapDecayReport {
  limits::Regime regime;
  std::vector<double> times;
  std::vector<double> mean_mass;
  std::vector<double> mean_mass_se;
  std::vector<double> median_mass;
  std::vector<double> median_mass_se;
  std::vector<std::size_t> survivors;
  stat::LineFit fit{};
  stat::LineFit median_fit{};
  double expected_slope = 0.0;
  std::vector<limits::HillSensitivity> hill;
  std::vector<Verdict> verdicts;
};

/// Decay of mean ν_{β,t}([a,1]) in t over surviving replications. The
/// median decay is reported alongside: the rescaled mass converges in
/// probability, while its mean is inflated by rare late-branching trees.
OverlapDecayReport overlap_decay_experiment(const ExperimentConfig& cfg);

struct SelfTestSettings {
  std::uint64_t master_seed = 1;
  std::size_t stable_draws = 100'000;
  double stable_alpha = 0.7;
  std::size_t gumbel_draws = 1'000'000;
  std::size_t pareto_draws = 100'000;
  std::size_t pareto_k = 1000;
  double pareto_alpha = 1.5;
  double hill_tolerance = 0.15;
  double se_multiplier = 4.0;
  double significance = 0.01;
};

/// Positive-stable cross-method KS, Gumbel-mixture median vs closed form,
/// Hill on exact Pareto samples.
std::vector<Verdict> limits_selftest(const SelfTestSettings& settings);

}  // namespace bbm::experiments
