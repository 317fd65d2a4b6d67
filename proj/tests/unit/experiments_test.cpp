#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bbm/config.hpp"
#include "bbm/experiments.hpp"

namespace bbm::experiments {
namespace {

ExperimentConfig from_text(std::string_view text) {
  return config::parse_config_text(text);
}

const Verdict& find_verdict(const std::vector<Verdict>& vs, std::string_view fragment) {
  for (const Verdict& v : vs) {
    if (v.claim.find(fragment) != std::string::npos) return v;
  }
  throw std::runtime_error("no verdict mentioning " + std::string(fragment));
}

TEST(StatKey, LabelsAreCanonical) {
  StatKey k = StatKey::of(StatKind::kAdditive, 2.0);
  k.beta = 0.5;
  EXPECT_EQ(k.label(), "W(beta=0.5,t=2)");
  EXPECT_EQ(StatKey::of(StatKind::kCount, 4.0).label(), "n(t=4)");
  EXPECT_EQ(stat_kind_from_string("overlap"), StatKind::kOverlap);
  EXPECT_FALSE(stat_kind_from_string("nope").has_value());
}

TEST(Ensemble, SingleReplicationEqualsItsValues) {
  ExperimentConfig cfg = from_text(
      "[experiment]\nreplications = 1\nseed = 3\n"
      "[statistics]\ncompute = n, W, M\ntimes = 1, 3\nbetas = 0.5\n");
  const EnsembleSummary s = run_ensemble(cfg);
  const auto keys = cfg.stat_keys();
  const ReplicationResult r = run_replication(cfg, keys, 0);
  ASSERT_EQ(s.columns.size(), keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    EXPECT_EQ(s.columns[i].summary.mean, r.values[i]) << s.columns[i].label;
    EXPECT_EQ(s.columns[i].summary.median, r.values[i]);
    EXPECT_EQ(s.columns[i].summary.count, 1u);
  }
}

TEST(Ensemble, DeterministicAndWorkerInvariant) {
  ExperimentConfig cfg = from_text(
      "[experiment]\nreplications = 300\nseed = 4\n"
      "[statistics]\ncompute = n, W, Z, overlap\ntimes = 4\nbetas = 0.5\na = 0.5\n");
  cfg.workers = 1;
  const EnsembleSummary a = run_ensemble(cfg);
  cfg.workers = 3;
  const EnsembleSummary b = run_ensemble(cfg);
  ASSERT_EQ(a.columns.size(), b.columns.size());
  for (std::size_t i = 0; i < a.columns.size(); ++i) {
    EXPECT_EQ(a.columns[i].samples, b.columns[i].samples);
    EXPECT_EQ(a.columns[i].summary.mean, b.columns[i].summary.mean);
    EXPECT_EQ(a.columns[i].summary.variance, b.columns[i].summary.variance);
  }
}

TEST(Ensemble, MissingStatisticIsConfigError) {
  const EnsembleSummary s = run_ensemble(from_text(
      "[experiment]\nreplications = 2\n[statistics]\ncompute = n\ntimes = 1\n"));
  EXPECT_THROW(check_martingale(s), ConfigError);
  EXPECT_THROW(s.require(StatKey::of(StatKind::kMax, 1.0)), ConfigError);
}

TEST(Verdicts, MeanVerdictStates) {
  EXPECT_EQ(mean_verdict("c", "x", 1.0, 1.1, 0.05, 4.0).status, VerdictStatus::kPass);
  const Verdict fail = mean_verdict("c", "x", 1.0, 1.3, 0.05, 4.0);
  EXPECT_EQ(fail.status, VerdictStatus::kFail);
  EXPECT_EQ(fail.expected, 1.0);
  EXPECT_EQ(fail.measured, 1.3);
  EXPECT_EQ(fail.std_error, 0.05);
  EXPECT_NEAR(fail.threshold, 0.2, 1e-15);
  EXPECT_EQ(mean_verdict("c", "x", 1.0, std::nan(""), 0.05, 4.0).status,
            VerdictStatus::kInconclusive);
}

TEST(SecondMoment, ClosedFormValues) {
  EXPECT_NEAR(second_moment_closed_form(0.0, 2.0, 2.0), 2.0 - std::exp(-2.0), 1e-14);
  EXPECT_NEAR(second_moment_closed_form(0.0, 2.0, 2.0), 1.8647, 1e-4);
  EXPECT_NEAR(second_moment_closed_form(0.5, 4.0, 2.0),
              std::exp(-3.0) + (2.0 / 0.75) * (1.0 - std::exp(-3.0)), 1e-14);
  EXPECT_NEAR(second_moment_closed_form(0.5, 4.0, 2.0), 2.5837, 1e-4);
  EXPECT_EQ(second_moment_closed_form(0.9, 0.0, 2.0), 1.0);
  // β = 1: the integrand is 1, so 1 + K t.
  EXPECT_NEAR(second_moment_closed_form(1.0, 3.0, 2.0), 7.0, 1e-12);
}

TEST(SecondMoment, WarnsBeyondL2) {
  const EnsembleSummary s = run_ensemble(from_text(
      "[experiment]\nreplications = 50\n[statistics]\ncompute = W\ntimes = 1\nbetas = 1.2\n"));
  const auto v = check_second_moment(s, 1.2);
  ASSERT_FALSE(v.empty());
  EXPECT_NE(v[0].detail.find("warning"), std::string::npos) << v[0].detail;
}

TEST(DeathFunctional, OracleValues) {
  const EnsembleSummary s = run_ensemble(from_text(
      "[experiment]\nreplications = 2000\nseed = 5\n"
      "[statistics]\ncompute = pairs\ntimes = 1, 2\npair_functions = one, identity\n"));
  const auto one = check_death_functional(s, "one");
  const auto id = check_death_functional(s, "identity");
  // 2e^{2t}(1 - e^{-t}) at t = 2, and 2e²(1 - 2e^{-1}) for f(s) = s at t = 1.
  EXPECT_NEAR(find_verdict(one, "t = 2").expected,
              2.0 * std::exp(4.0) * (1.0 - std::exp(-2.0)), 1e-9);
  EXPECT_NEAR(find_verdict(id, "t = 1").expected,
              2.0 * std::exp(2.0) * (1.0 - 2.0 * std::exp(-1.0)), 1e-9);
  EXPECT_NEAR(find_verdict(id, "t = 1").expected, 3.905, 1e-3);
  for (const auto& v : one) EXPECT_EQ(v.status, VerdictStatus::kPass) << v.claim;
  for (const auto& v : id) EXPECT_EQ(v.status, VerdictStatus::kPass) << v.claim;
}

TEST(PopulationMoments, LineageCountForZeroOrThree) {
  // μ(0) = 1/3, μ(3) = 2/3, s = 1, t = 2: e² + (1/3)(e² - e).
  const EnsembleSummary s = run_ensemble(from_text(
      "[experiment]\nreplications = 20000\nseed = 6\n"
      "[simulation]\noffspring = 0:1/3, 3:2/3\n"
      "[statistics]\ncompute = n, lineages\ntimes = 2\nintervals = 1:2\n"));
  const auto v = check_population_moments(s);
  const Verdict& lineage = find_verdict(v, "n([1,2])");
  const double e2 = std::exp(2.0);
  EXPECT_NEAR(lineage.expected, e2 + (e2 - std::exp(1.0)) / 3.0, 1e-12);
  EXPECT_NEAR(lineage.expected, 8.94598, 1e-5);
  EXPECT_EQ(lineage.status, VerdictStatus::kPass) << lineage.measured;
  // No geometric fit for non-binary laws.
  for (const auto& x : v) EXPECT_EQ(x.claim.find("Geometric"), std::string::npos);
}

TEST(PopulationMoments, TimeZeroIsOne) {
  const EnsembleSummary s = run_ensemble(from_text(
      "[experiment]\nreplications = 20\n[statistics]\ncompute = n\ntimes = 0, 1\n"));
  const StatColumn& c = s.require(StatKey::of(StatKind::kCount, 0.0));
  for (const double x : c.samples) EXPECT_EQ(x, 1.0);
}

TEST(ManyToOne, ChecksDoNotPerturbEachOther) {
  const ExperimentConfig both = from_text(
      "[experiment]\nreplications = 500\nseed = 7\n"
      "[statistics]\ncompute = n, sum\ntimes = 2\nsum_functions = one\n"
      "[checks]\nrun = many_to_one, population_moments\n");
  ExperimentConfig alone = both;
  alone.checks.erase(alone.checks.begin());
  const auto all = run_checks(run_ensemble(both));
  const auto pop = run_checks(run_ensemble(alone));
  ASSERT_EQ(all.size(), pop.size() + 1);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    EXPECT_EQ(all[i + 1].measured, pop[i].measured);
    EXPECT_EQ(all[i + 1].expected, pop[i].expected);
  }
  EXPECT_NEAR(all[0].expected, std::exp(2.0), 1e-12);
  EXPECT_EQ(all[0].status, VerdictStatus::kPass);
}

TEST(Barrier, VacuousBoundIsInconclusive) {
  const EnsembleSummary s = run_ensemble(from_text(
      "[experiment]\nreplications = 20\n"
      "[simulation]\nhorizon = 2\nsnapshot_step = 0.5\n[statistics]\ncompute = barrier\n"));
  EXPECT_EQ(check_barrier_bound(s, -1.0).status, VerdictStatus::kInconclusive);
  const Verdict far = check_barrier_bound(s, 10.0);
  EXPECT_NEAR(far.expected, std::exp(-10.0 * std::numbers::sqrt2), 1e-20);
  EXPECT_EQ(far.measured, 0.0);
  EXPECT_EQ(far.status, VerdictStatus::kPass);
}

TEST(Overlap, ExactFiniteTimeIdentity) {
  // E[e^{(1-β²)at} ν_{β,t}([a,1]) W_t(β)²] = E[W_{(1-a)t}(β)²] for every t.
  const double beta = 0.5, a = 0.5, t = 4.0;
  const ExperimentConfig cfg = from_text(
      "[experiment]\nreplications = 20000\nseed = 8\n"
      "[statistics]\ncompute = W, overlap\ntimes = 4\nbetas = 0.5\na = 0.5\n");
  const EnsembleSummary s = run_ensemble(cfg);
  StatKey wk = StatKey::of(StatKind::kAdditive, t);
  wk.beta = beta;
  StatKey ok = StatKey::of(StatKind::kOverlap, t);
  ok.beta = beta;
  ok.a = a;
  const auto& w = s.require(wk).samples;
  const auto& nu = s.require(ok).samples;
  std::vector<double> x;
  for (std::size_t i = 0; i < w.size(); ++i) {
    x.push_back(std::exp((1 - beta * beta) * a * t) * nu[i] * w[i] * w[i]);
  }
  const stat::Summary m = stat::summarize(x);
  EXPECT_NEAR(m.mean, second_moment_closed_form(beta, (1 - a) * t, 2.0), 4.0 * m.std_error);
}

TEST(Overlap, BetaZeroIdentityValue) {
  // β = 0, t = 8, a = 0.5: E[e^4 ν n(8)² e^{-16}] = E W_4(0)² = 2 - e^{-4}.
  EXPECT_NEAR(second_moment_closed_form(0.0, 4.0, 2.0), 2.0 - std::exp(-4.0), 1e-14);
  EXPECT_NEAR(second_moment_closed_form(0.0, 4.0, 2.0), 1.9817, 1e-4);
}

TEST(ConfigValidation, MissingSnapshotNamesTime) {
  ExperimentConfig cfg;
  cfg.sim.horizon = 6.0;
  cfg.sim.snapshot_times = {6.0};
  cfg.times = {6.0};
  cfg.betas = {0.5};
  cfg.a_grid = {0.5};
  cfg.compute = {StatKind::kOverlap};
  try {
    cfg.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos) << e.what();
  }
}

TEST(Fluctuations, ExtremalRegimeHill) {
  ExperimentConfig cfg = from_text(
      "[experiment]\nreplications = 400\nseed = 9\n"
      "[fluctuation]\nbeta = 1.2\nt = 3\ngap = 2\n");
  const FluctuationReport r = fluctuation_experiment(cfg);
  EXPECT_EQ(r.spec.regime, limits::Regime::kExtremal);
  EXPECT_EQ(r.used, 400u);
  EXPECT_EQ(r.rescaled.size(), 400u);
  EXPECT_TRUE(r.standardized.empty());
  ASSERT_FALSE(r.verdicts.empty());
  EXPECT_NEAR(r.verdicts[0].expected, std::numbers::sqrt2 / 1.2, 1e-12);
}

TEST(Fluctuations, SubcriticalStandardizes) {
  ExperimentConfig cfg = from_text(
      "[experiment]\nreplications = 300\nseed = 10\n"
      "[fluctuation]\nbeta = 0.3\nt = 2\ngap = 3\n");
  const FluctuationReport r = fluctuation_experiment(cfg);
  EXPECT_EQ(r.spec.regime, limits::Regime::kSubcritical);
  EXPECT_EQ(r.standardized.size(), r.used);
  ASSERT_TRUE(r.ks.has_value());
  EXPECT_GE(r.verdicts.size(), 2u);
}

TEST(Fluctuations, StandardizedResidualHasExactFiniteTimeMoments) {
  // Given F_t the increment has variance W_t(2β)·Var W_Δ(β), so with the
  // time-t proxy E Z = 0 and E Z² = Var W_Δ / Var W_∞ at every finite t.
  ExperimentConfig cfg = from_text(
      "[experiment]\nreplications = 4000\nseed = 12\n"
      "[fluctuation]\nbeta = 0.5\nt = 3\ngap = 2\n");
  const FluctuationReport r = fluctuation_experiment(cfg);
  ASSERT_EQ(r.used, 4000u);
  const double rate = 1.0 - 0.25;
  const double var_gap = second_moment_closed_form(0.5, 2.0, 2.0) - 1.0;
  const double var_inf = 2.0 / rate - 1.0;
  std::vector<double> sq;
  for (const double z : r.standardized) sq.push_back(z * z);
  const stat::Summary z = stat::summarize(r.standardized);
  const stat::Summary z2 = stat::summarize(sq);
  EXPECT_LE(std::abs(z.mean), 4.0 * z.std_error) << z.mean;
  EXPECT_LE(std::abs(z2.mean - var_gap / var_inf), 4.0 * z2.std_error)
      << z2.mean << " vs " << var_gap / var_inf;
}

TEST(Fluctuations, RejectsBetaOutsideRegimes) {
  ExperimentConfig cfg = from_text("[experiment]\nreplications = 3\n[fluctuation]\nbeta = 1.5\n");
  EXPECT_THROW(fluctuation_experiment(cfg), std::exception);
}

TEST(OverlapDecay, TooFewSurvivorsIsInconclusive) {
  ExperimentConfig cfg = from_text(
      "[experiment]\nreplications = 50\n[overlap]\nbeta = 0.5\na = 0.5\ntimes = 2, 4\n");
  const OverlapDecayReport r = overlap_decay_experiment(cfg);
  ASSERT_FALSE(r.verdicts.empty());
  EXPECT_EQ(r.verdicts[0].status, VerdictStatus::kInconclusive);
  EXPECT_NEAR(r.expected_slope, -0.375, 1e-15);
}

TEST(LimitsSelftest, AllPass) {
  const auto v = limits_selftest(SelfTestSettings{});
  ASSERT_EQ(v.size(), 3u);
  for (const auto& x : v) EXPECT_EQ(x.status, VerdictStatus::kPass) << x.claim << " " << x.detail;
}

}  // namespace
}  // namespace bbm::experiments
