#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "bbm/config.hpp"
#include "bbm/errors.hpp"
#include "bbm/experiments.hpp"
#include "bbm/function_registry.hpp"
#include "bbm/sampling.hpp"

namespace bbm::experiments {
namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

std::string fmt(double x) {
  std::ostringstream out;
  out.precision(10);
  out << x;
  return out.str();
}

/// Stream reserved for an auxiliary consumer identified by `tag`.
RngStream oracle_stream(std::uint64_t master_seed, std::string_view tag) {
  return RngStream(master_seed,
                   stream_range::kOracleBase +
                       (fnv1a64(tag) & (stream_range::kOracleStride - 1)));
}

double k_se(const EnsembleSummary& s) { return s.config.tests.se_multiplier; }

std::vector<double> sorted_times(const EnsembleSummary& s) {
  std::vector<double> t = s.config.times;
  std::sort(t.begin(), t.end());
  return t;
}

Verdict p_value_verdict(std::string check, std::string claim, double p,
                        double significance, std::string detail) {
  Verdict v;
  v.check = std::move(check);
  v.claim = std::move(claim);
  v.expected = significance;
  v.measured = p;
  v.std_error = std::nan("");
  v.threshold = significance;
  v.status = std::isfinite(p) ? (p > significance ? VerdictStatus::kPass
                                                  : VerdictStatus::kFail)
                              : VerdictStatus::kInconclusive;
  v.detail = std::move(detail);
  return v;
}

Verdict geometric_fit(const StatColumn& col, double t, double significance) {
  const std::vector<double> values = stat::finite_values(col.samples);
  const double n = static_cast<double>(values.size());
  const double p = std::exp(-t);
  std::vector<double> expected;
  std::vector<double> observed;
  // Single-value bins while both the bin and the remaining tail expect at
  // least 5 counts; the rest is one tail bin.
  double tail = 1.0;  // P(N >= k)
  std::size_t k = 1;
  while (n * p * tail >= 5.0 && n * tail * (1.0 - p) >= 5.0) {
    expected.push_back(n * p * tail);
    tail *= 1.0 - p;
    ++k;
  }
  const std::size_t last = k;  // tail bin collects N >= last
  expected.push_back(n * tail);
  observed.assign(expected.size(), 0.0);
  for (const double v : values) {
    const auto count = static_cast<std::size_t>(std::llround(v));
    const std::size_t bin = count >= last ? last - 1 : count - 1;
    if (count >= 1) observed[bin] += 1.0;
  }
  const std::string claim = "n(" + fmt(t) + ") ~ Geometric(e^-t)";
  if (expected.size() < 2) {
    Verdict v;
    v.check = "population_moments";
    v.claim = claim;
    v.status = VerdictStatus::kInconclusive;
    v.detail = "fewer than two bins with expected count >= 5";
    return v;
  }
  const stat::ChiSquareResult chi = stat::chi_square_gof(observed, expected);
  std::ostringstream d;
  d << "chi2 = " << chi.statistic << ", dof = " << chi.dof
    << ", P(n=1): expected " << p << " observed " << observed[0] / n;
  return p_value_verdict("population_moments", claim, chi.p_value,
                         significance, d.str());
}

}  // namespace

std::vector<Verdict> check_population_moments(const EnsembleSummary& summary) {
  const ExperimentConfig& cfg = summary.config;
  std::vector<Verdict> out;
  for (const double t : sorted_times(summary)) {
    StatKey key = StatKey::of(StatKind::kCount, t);
    const StatColumn& col = summary.require(key);
    out.push_back(mean_verdict("population_moments",
                               "E n(" + fmt(t) + ") = e^t", std::exp(t),
                               col.summary.mean, col.summary.std_error,
                               k_se(summary)));
  }
  const double mu0 = cfg.sim.offspring.extinction_weight();
  for (const auto& [s, t] : cfg.intervals) {
    StatKey key = StatKey::of(StatKind::kLineages, t);
    key.s = s;
    const StatColumn& col = summary.require(key);
    out.push_back(mean_verdict(
        "population_moments",
        "E n([" + fmt(s) + "," + fmt(t) + "]) = e^t + mu(0)(e^t - e^s)",
        std::exp(t) + mu0 * (std::exp(t) - std::exp(s)), col.summary.mean,
        col.summary.std_error, k_se(summary)));
  }
  if (cfg.sim.offspring.deterministic_count() == 2) {
    for (const double t : sorted_times(summary)) {
      if (t <= 0.0) continue;
      out.push_back(geometric_fit(summary.require(StatKey::of(StatKind::kCount, t)), t,
                                  cfg.tests.significance));
    }
  }
  return out;
}

std::vector<Verdict> check_many_to_one(const EnsembleSummary& summary,
                                       const std::string& function_id) {
  const ExperimentConfig& cfg = summary.config;
  const NamedFunction f = parse_function(function_id);
  std::vector<Verdict> out;
  for (const double t : sorted_times(summary)) {
    StatKey key = StatKey::of(StatKind::kParticleSum, t);
    key.function_id = function_id;
    const StatColumn& col = summary.require(key);

    // Independent Brownian oracle: E F(B_t) from B_t = √t N.
    RngStream rng = oracle_stream(cfg.master_seed, "many_to_one|" + key.label());
    boost::random::normal_distribution<double> normal;
    const std::size_t m = cfg.tests.oracle_samples;
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double y = f(std::sqrt(t) * normal(rng));
      const double delta = y - mean;
      mean += delta / static_cast<double>(i + 1);
      m2 += delta * (y - mean);
    }
    const double oracle_se =
        m > 1 ? std::sqrt(m2 / static_cast<double>(m - 1) / static_cast<double>(m))
              : 0.0;
    const double scale = std::exp(t);
    const double se = std::hypot(col.summary.std_error, scale * oracle_se);
    Verdict v = mean_verdict("many_to_one",
                             "E sum F(X_u(" + fmt(t) + ")) = e^t E F(B_t), F = " +
                                 function_id,
                             scale * mean, col.summary.mean, se, k_se(summary));
    v.detail += "; oracle samples = " + std::to_string(m) +
                ", oracle se = " + fmt(scale * oracle_se);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<Verdict> check_death_functional(const EnsembleSummary& summary,
                                            const std::string& function_id) {
  const ExperimentConfig& cfg = summary.config;
  const NamedFunction f = parse_function(function_id);
  const double K = cfg.sim.offspring.factorial_moment();
  const double tol = cfg.tests.quadrature_tolerance;
  std::vector<Verdict> out;
  for (const double t : sorted_times(summary)) {
    StatKey key = StatKey::of(StatKind::kPairs, t);
    key.function_id = function_id;
    const StatColumn& col = summary.require(key);

    double integral = 0.0;
    if (t > 0.0) {
      double error = 0.0, l1 = 0.0;
      auto g = [&](double s) { return f(s) * std::exp(-s); };
      integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          g, 0.0, t, 40, tol, &error, &l1);
      if (!(error <= tol * l1) || !std::isfinite(integral)) {
        std::ostringstream msg;
        msg << "death functional quadrature did not converge for f = "
            << function_id << " on [0, " << t << "]: estimate " << integral
            << ", error estimate " << error << " > " << tol << " * L1 ("
            << l1 << ")";
        throw NumericError(msg.str());
      }
    }
    out.push_back(mean_verdict(
        "death_functional",
        "E sum_{u!=v} f(d_uv) = K e^{2t} int_0^t f(s) e^-s ds, f = " +
            function_id + ", t = " + fmt(t),
        K * std::exp(2.0 * t) * integral, col.summary.mean,
        col.summary.std_error, k_se(summary)));
  }
  return out;
}

double second_moment_closed_form(double beta, double t, double K) {
  const double a = 1.0 - beta * beta;
  const double integral = a == 0.0 ? t : -std::expm1(-a * t) / a;
  return std::exp(-a * t) + K * integral;
}

std::vector<Verdict> check_second_moment(const EnsembleSummary& summary,
                                         double beta) {
  const ExperimentConfig& cfg = summary.config;
  const double K = cfg.sim.offspring.factorial_moment();
  std::vector<Verdict> out;
  for (const double t : sorted_times(summary)) {
    StatKey key = StatKey::of(StatKind::kAdditive, t);
    key.beta = beta;
    const StatColumn& col = summary.require(key);
    std::vector<double> squares;
    squares.reserve(col.samples.size());
    for (const double w : col.samples) squares.push_back(w * w);
    const stat::Summary sq = stat::summarize(squares);
    Verdict v = mean_verdict(
        "second_moment",
        "E W_t(beta)^2 closed form, beta = " + fmt(beta) + ", t = " + fmt(t),
        second_moment_closed_form(beta, t, K), sq.mean, sq.std_error,
        k_se(summary));
    if (beta >= 1.0) {
      v.detail += "; warning: beta >= 1 is outside the L2 regime, W_t(beta)^2 "
                  "is heavy-tailed and its mean diverges as t grows";
    }
    out.push_back(std::move(v));
  }
  return out;
}

Verdict check_barrier_bound(const EnsembleSummary& summary, double level) {
  const StatColumn& col = summary.require(StatKey::of(StatKind::kBarrierExcess, summary.config.sim.horizon));
  std::size_t n = 0, hits = 0;
  for (const double x : col.samples) {
    if (std::isnan(x)) continue;  // truncated
    ++n;
    if (x > level) ++hits;
  }
  Verdict v;
  v.check = "barrier_bound";
  v.claim = "P(sup_t max_u X_u(t) - sqrt2 t > " + fmt(level) +
            ") <= e^{-sqrt2 L}";
  v.expected = std::exp(-kSqrt2 * level);
  if (n == 0) {
    v.status = VerdictStatus::kInconclusive;
    v.detail = "no complete replications";
    return v;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  v.measured = p;
  v.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  v.threshold = v.expected + k_se(summary) * v.std_error;
  if (v.expected >= 1.0) {
    v.status = VerdictStatus::kInconclusive;
    v.detail = "vacuous: bound >= 1";
    return v;
  }
  v.status = p <= v.threshold ? VerdictStatus::kPass : VerdictStatus::kFail;
  v.detail = std::to_string(hits) + " of " + std::to_string(n) +
             " replications crossed on the snapshot grid (" +
             std::to_string(summary.config.sim.snapshot_times.size()) +
             " times)";
  return v;
}

std::vector<Verdict> check_critical_scaling(const EnsembleSummary& summary) {
  const std::vector<double> times = sorted_times(summary);
  if (times.empty()) throw ConfigError("critical_scaling: empty time grid");
  std::vector<Verdict> out;

  // (i) √t W_t(√2) against √(2/π)·(-Z_t(√2)): Z_t(√2) = ∂W/∂β is negative
  // on survival, and -Z_t(√2) is the positive Lalley-Sellke limit. Rare
  // realizations with a particle ahead of √2 t make both huge with the
  // opposite sign, so linear correlation measures the outliers; the rank
  // correlation measures the typical realization.
  const double t_max = times.back();
  StatKey wk = StatKey::of(StatKind::kAdditive, t_max);
  wk.beta = kSqrt2;
  StatKey zk = StatKey::of(StatKind::kDerivative, t_max);
  zk.beta = kSqrt2;
  const StatColumn& w = summary.require(wk);
  const StatColumn& z = summary.require(zk);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    x.push_back(std::sqrt(t_max) * w.samples[i]);
    y.push_back(-std::sqrt(2.0 / std::numbers::pi) * z.samples[i]);
  }
  const double corr = stat::spearman_correlation(x, y);
  const double linear = stat::pearson_correlation(x, y);
  {
    Verdict v;
    v.check = "critical_scaling";
    v.claim = "rank corr(sqrt(t) W_t(sqrt2), -sqrt(2/pi) Z_t(sqrt2)) > 0.9 at t = " +
              fmt(t_max);
    v.expected = 0.9;
    v.measured = corr;
    v.std_error = std::nan("");
    v.threshold = 0.9;
    v.status = std::isfinite(corr) ? (corr > 0.9 ? VerdictStatus::kPass
                                                 : VerdictStatus::kFail)
                                   : VerdictStatus::kInconclusive;
    std::ostringstream d;
    d << "Z_t = dW/dbeta; linear correlation " << linear;
    v.detail = d.str();
    out.push_back(std::move(v));
  }

  // (ii) Tightness: IQR of M(t) - m(t) relative to the first grid time.
  const double iqr0 = summary.require(StatKey::of(StatKind::kMax, times.front()))
                          .summary.iqr();
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double iqr = summary.require(StatKey::of(StatKind::kMax, times[i])).summary.iqr();
    Verdict v;
    v.check = "critical_scaling";
    v.claim = "IQR(M(" + fmt(times[i]) + ") - m) / IQR(M(" + fmt(times[0]) +
              ") - m) in [0.67, 1.5]";
    v.expected = 1.0;
    v.measured = iqr / iqr0;
    v.std_error = std::nan("");
    v.threshold = 1.5;
    v.status = std::isfinite(v.measured)
                   ? (v.measured >= 0.67 && v.measured <= 1.5
                          ? VerdictStatus::kPass
                          : VerdictStatus::kFail)
                   : VerdictStatus::kInconclusive;
    v.detail = "IQR " + fmt(iqr) + " vs " + fmt(iqr0);
    out.push_back(std::move(v));
  }

  // (iii) median M(t)/t increasing toward √2.
  {
    std::ostringstream d;
    bool increasing = true;
    double prev = -INFINITY;
    double last = std::nan("");
    for (const double t : times) {
      if (t <= 0.0) continue;
      const double med = summary.require(StatKey::of(StatKind::kMax, t)).summary.median / t;
      d << (prev == -INFINITY ? "" : ", ") << "t=" << fmt(t) << ": " << med;
      if (!(med > prev)) increasing = false;
      prev = med;
      last = med;
    }
    Verdict v;
    v.check = "critical_scaling";
    v.claim = "median M(t)/t increasing toward sqrt2";
    v.expected = kSqrt2;
    v.measured = last;
    v.std_error = std::nan("");
    v.threshold = kSqrt2;
    v.status = increasing && last < kSqrt2 ? VerdictStatus::kPass
                                           : VerdictStatus::kFail;
    v.detail = d.str();
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<Verdict> check_martingale(const EnsembleSummary& summary) {
  std::vector<Verdict> out;
  for (const StatColumn& col : summary.columns) {
    const StatKind kind = col.key.kind;
    if (kind != StatKind::kAdditive && kind != StatKind::kDerivative) continue;
    const bool additive = kind == StatKind::kAdditive;
    out.push_back(mean_verdict("martingale",
                               "E " + col.label + " = " + (additive ? "1" : "0"),
                               additive ? 1.0 : 0.0, col.summary.mean,
                               col.summary.std_error, k_se(summary)));
  }
  if (out.empty()) {
    throw ConfigError("martingale: no W or Z statistics in the grid");
  }
  return out;
}

namespace {

/// ∫ g over the real line, split at the jumps of g; throws NumericError with
/// diagnostics when the adaptive rule misses `tol`.
double integrate_line(const std::function<double(double)>& g,
                      const std::vector<double>& breakpoints, double tol,
                      const std::string& what) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> edges{-kInf};
  edges.insert(edges.end(), breakpoints.begin(), breakpoints.end());
  edges.push_back(kInf);
  std::sort(edges.begin(), edges.end());
  double value = 0.0, error = 0.0, l1 = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (!(edges[i] < edges[i + 1])) continue;
    double e = 0.0, a = 0.0;
    value += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        g, edges[i], edges[i + 1], 40, tol, &e, &a);
    error += e;
    l1 += a;
  }
  if (!std::isfinite(value) || !(error <= tol * std::max(l1, 1e-300))) {
    std::ostringstream msg;
    msg << what << ": quadrature did not converge: estimate " << value
        << ", error estimate " << error << ", L1 " << l1;
    throw NumericError(msg.str());
  }
  return value;
}

Verdict relative_verdict(std::string check, std::string claim, double expected,
                         const stat::Summary& s, double tol) {
  Verdict v;
  v.check = std::move(check);
  v.claim = std::move(claim);
  v.expected = expected;
  v.measured = s.mean;
  v.std_error = s.std_error;
  v.threshold = tol * std::abs(expected);
  if (!std::isfinite(s.mean)) {
    v.status = VerdictStatus::kInconclusive;
    v.detail = "measurement undefined";
    return v;
  }
  v.status = std::abs(s.mean - expected) <= v.threshold ? VerdictStatus::kPass
                                                        : VerdictStatus::kFail;
  std::ostringstream d;
  d << "relative error " << std::abs(s.mean - expected) / std::abs(expected)
    << ", tolerance " << tol << ", finite-t bias absorbed by the tolerance";
  v.detail = d.str();
  return v;
}

}  // namespace

std::vector<Verdict> check_functional_limit(const EnsembleSummary& summary) {
  const ExperimentConfig& cfg = summary.config;
  std::vector<Verdict> out;
  for (const StatColumn& col : summary.columns) {
    if (col.key.kind != StatKind::kFunctional) continue;
    const NamedFunction f = parse_function(col.key.function_id);
    const double limit = integrate_line(
        [&](double x) {
          return f(x) * std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
        },
        f.breakpoints, cfg.tests.quadrature_tolerance,
        "functional_limit, f = " + col.key.function_id);
    out.push_back(relative_verdict(
        "functional_limit",
        "E " + col.label + " -> int f(x) e^{-x^2/2}/sqrt(2 pi) dx", limit,
        col.summary, cfg.tests.relative_tolerance));
  }
  if (out.empty()) throw ConfigError("functional_limit: no Wf statistics in the grid");
  return out;
}

std::vector<Verdict> check_growth_limit(const EnsembleSummary& summary) {
  const ExperimentConfig& cfg = summary.config;
  std::vector<Verdict> out;
  for (const StatColumn& col : summary.columns) {
    if (col.key.kind != StatKind::kGrowth) continue;
    const NamedFunction f = parse_function(col.key.function_id);
    const double beta = col.key.beta;
    const double limit = integrate_line(
        [&](double x) {
          const double fx = f(x);
          return fx == 0.0 ? 0.0
                           : fx * std::exp(-beta * x) /
                                 std::sqrt(2.0 * std::numbers::pi);
        },
        f.breakpoints, cfg.tests.quadrature_tolerance,
        "growth_limit, f = " + col.key.function_id);
    out.push_back(relative_verdict(
        "growth_limit", "E " + col.label + " -> int f(x) e^{-beta x}/sqrt(2 pi) dx",
        limit, col.summary, cfg.tests.relative_tolerance));
  }
  if (out.empty()) throw ConfigError("growth_limit: no V statistics in the grid");
  return out;
}

std::vector<Verdict> check_expectations(const EnsembleSummary& summary) {
  std::vector<Verdict> out;
  for (const ExpectedMean& e : summary.config.expectations) {
    const auto it = std::find_if(
        summary.columns.begin(), summary.columns.end(),
        [&](const StatColumn& c) { return c.label == e.label; });
    if (it == summary.columns.end()) {
      throw ConfigError("checks.expect: no statistic labelled " + e.label);
    }
    out.push_back(mean_verdict("expect", "E " + e.label + " = " + fmt(e.value),
                               e.value, it->summary.mean,
                               it->summary.std_error, k_se(summary)));
  }
  return out;
}

namespace {

double parse_arg(const std::string& check, const std::string& arg) {
  try {
    std::size_t used = 0;
    const double x = std::stod(arg, &used);
    if (used == arg.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("checks: " + check + ": argument '" + arg +
                    "' is not a number");
}

void append(std::vector<Verdict>& out, std::vector<Verdict> more) {
  out.insert(out.end(), std::make_move_iterator(more.begin()),
             std::make_move_iterator(more.end()));
}

}  // namespace

std::vector<Verdict> run_checks(const EnsembleSummary& summary) {
  const ExperimentConfig& cfg = summary.config;
  std::vector<Verdict> out;
  for (const CheckRequest& req : cfg.checks) {
    if (req.name == "population_moments") {
      append(out, check_population_moments(summary));
    } else if (req.name == "many_to_one") {
      for (const auto& id : req.args.empty() ? cfg.sum_functions : req.args) {
        append(out, check_many_to_one(summary, id));
      }
    } else if (req.name == "death_functional") {
      for (const auto& id : req.args.empty() ? cfg.pair_functions : req.args) {
        append(out, check_death_functional(summary, id));
      }
    } else if (req.name == "second_moment") {
      if (req.args.empty()) {
        for (const double b : cfg.betas) append(out, check_second_moment(summary, b));
      } else {
        for (const auto& a : req.args) {
          append(out, check_second_moment(summary, parse_arg(req.name, a)));
        }
      }
    } else if (req.name == "barrier_bound") {
      if (req.args.empty()) {
        throw ConfigError("checks: barrier_bound needs at least one level L");
      }
      for (const auto& a : req.args) {
        out.push_back(check_barrier_bound(summary, parse_arg(req.name, a)));
      }
    } else if (req.name == "martingale") {
      append(out, check_martingale(summary));
    } else if (req.name == "functional_limit") {
      append(out, check_functional_limit(summary));
    } else if (req.name == "growth_limit") {
      append(out, check_growth_limit(summary));
    } else if (req.name == "critical_scaling") {
      append(out, check_critical_scaling(summary));
    } else {
      throw ConfigError("checks: unknown check '" + req.name + "'");
    }
  }
  append(out, check_expectations(summary));
  return out;
}

// --- Fluctuations ---------------------------------------------------------

FluctuationReport fluctuation_experiment(const ExperimentConfig& cfg) {
  if (!cfg.fluctuation) {
    throw ConfigError("fluctuation experiment needs a [fluctuation] section");
  }
  cfg.validate();
  const FluctuationSettings& fs = *cfg.fluctuation;
  FluctuationReport report;
  try {
    report.spec = limits::FluctuationSpec::for_beta(
        fs.beta, cfg.sim.offspring.factorial_moment());
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("fluctuation.beta: ") + e.what());
  }
  const limits::FluctuationSpec& spec = report.spec;
  const double t = fs.t;
  const double t_end = fs.t + fs.gap;

  struct Row {
    double rescaled = std::nan("");
    double proxy = std::nan("");
    bool usable = false;
  };
  std::vector<Row> rows(cfg.replications);
  parallel_for(cfg.replications, cfg.workers, [&](std::size_t r) {
    RngStream rng(cfg.master_seed, r);
    const Realization real = simulate(cfg.sim, rng);
    if (real.truncated() || !real.survived()) return;
    const Snapshot& s0 = alive_at(real, t);
    const Snapshot& s1 = alive_at(real, t_end);
    Row row;
    row.rescaled = limits::rescale_fluctuation(
        spec, t, stats::additive_martingale(s0, spec.beta),
        stats::additive_martingale(s1, spec.beta));
    // The variance proxy is read at t, not t + gap: given F_t the rescaled
    // increment has conditional variance proportional to W_t(2β), so an
    // F_t-measurable proxy keeps the standardized residual centred with unit
    // variance. A proxy at t + gap shares the increment's randomness.
    switch (spec.regime) {
      case limits::Regime::kSubcritical:
        row.proxy = stats::additive_martingale(s0, 2.0 * spec.beta);
        break;
      case limits::Regime::kBoundary:
        row.proxy =
            limits::z_infinity_proxy(t, stats::additive_martingale(s0, kSqrt2));
        break;
      case limits::Regime::kExtremal:
        break;
    }
    row.usable = true;
    rows[r] = row;
  });

  report.replications = cfg.replications;
  for (const Row& row : rows) {
    if (!row.usable) continue;
    ++report.used;
    report.rescaled.push_back(row.rescaled);
    if (spec.regime != limits::Regime::kExtremal) {
      const double var = limits::gaussian_fluctuation_variance(spec, row.proxy);
      report.standardized.push_back(var > 0.0 ? row.rescaled / std::sqrt(var)
                                              : std::nan(""));
    }
  }

  const std::string where = "beta = " + fmt(spec.beta) + ", t = " + fmt(t) +
                            ", gap = " + fmt(fs.gap) + ", regime " +
                            limits::to_string(spec.regime);
  if (spec.regime != limits::Regime::kExtremal) {
    const std::vector<double> z = stat::finite_values(report.standardized);
    if (z.size() < 8) {
      Verdict v;
      v.check = "fluctuations";
      v.claim = "standardized fluctuations ~ N(0,1)";
      v.status = VerdictStatus::kInconclusive;
      v.detail = "fewer than 8 usable replications";
      report.verdicts.push_back(v);
      return report;
    }
    report.ks = stat::ks_normal(z);
    report.anderson_darling = stat::anderson_darling_normal(z);
    const stat::Summary zs = stat::summarize(z);
    std::ostringstream d;
    d << where << "; n = " << z.size() << ", mean " << zs.mean << ", var "
      << zs.variance;
    report.verdicts.push_back(p_value_verdict(
        "fluctuations", "KS normality of standardized fluctuations",
        report.ks->p_value, cfg.tests.significance,
        d.str() + ", D = " + fmt(report.ks->statistic)));
    report.verdicts.push_back(p_value_verdict(
        "fluctuations", "Anderson-Darling normality of standardized fluctuations",
        report.anderson_darling->p_value, cfg.tests.significance,
        d.str() + ", A2 = " + fmt(report.anderson_darling->statistic)));
    return report;
  }

  // Extremal regime: tail index of the positive part.
  const double alpha = spec.stable_index();
  Verdict v;
  v.check = "fluctuations";
  v.claim = "Hill index of positive rescaled fluctuations = sqrt2/beta";
  v.expected = alpha;
  v.std_error = std::nan("");
  v.threshold = fs.hill_tolerance;
  std::vector<double> fractions = fs.hill_fractions;
  std::vector<double> usable;
  for (const double x : report.rescaled) {
    if (std::isfinite(x)) usable.push_back(x);
  }
  try {
    report.hill = limits::hill_sensitivity(usable, fractions);
  } catch (const ArgumentError& e) {
    v.status = VerdictStatus::kInconclusive;
    v.detail = e.what();
    report.verdicts.push_back(v);
    return report;
  }
  // Primary estimate: the fraction closest to 1%.
  std::size_t primary = 0;
  for (std::size_t i = 1; i < report.hill.size(); ++i) {
    if (std::abs(report.hill[i].fraction - 0.01) <
        std::abs(report.hill[primary].fraction - 0.01)) {
      primary = i;
    }
  }
  v.measured = report.hill[primary].estimate;
  v.status = std::abs(v.measured - alpha) <= fs.hill_tolerance
                 ? VerdictStatus::kPass
                 : VerdictStatus::kFail;
  std::ostringstream d;
  d << where << "; n = " << usable.size() << "; k-sensitivity:";
  for (const auto& h : report.hill) {
    d << " k=" << h.k << " (" << h.fraction * 100.0 << "%) -> " << h.estimate
      << ";";
  }
  d << " finite-gap proxy W_{t+gap} leaves a residual bias";
  v.detail = d.str();
  report.verdicts.push_back(v);
  return report;
}

// --- Overlap decay -------------------------------------------------------

namespace {

/// Sample median with the order-statistic standard error
/// (x_(n/2 + sqrt(n)/2) - x_(n/2 - sqrt(n)/2)) / 2.
std::pair<double, double> median_with_se(std::vector<double> v) {
  std::erase_if(v, [](double x) { return !std::isfinite(x); });
  if (v.size() < 2) return {std::nan(""), std::nan("")};
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  auto at = [&](double rank) {
    const auto i = static_cast<std::size_t>(
        std::clamp(std::round(rank), 0.0, n - 1.0));
    return v[i];
  };
  const double median = stat::quantile_sorted(v, 0.5);
  const double half = 0.5 * std::sqrt(n);
  return {median, 0.5 * (at(0.5 * n + half) - at(0.5 * n - half))};
}

}  // namespace

OverlapDecayReport overlap_decay_experiment(const ExperimentConfig& cfg) {
  if (!cfg.overlap) {
    throw ConfigError("overlap experiment needs an [overlap] section");
  }
  cfg.validate();
  const OverlapDecaySettings& os = *cfg.overlap;
  OverlapDecayReport report;
  const double beta = os.beta;
  const double a = os.a;
  if (!(beta >= 0.0 && beta < kSqrt2)) {
    throw ConfigError("overlap.beta must lie in [0, sqrt2)");
  }
  report.regime = limits::FluctuationSpec::for_beta(beta, 0.0).regime;
  report.times = os.times;
  std::sort(report.times.begin(), report.times.end());
  const std::size_t nt = report.times.size();

  std::vector<std::vector<double>> values(
      cfg.replications, std::vector<double>(nt, std::nan("")));
  parallel_for(cfg.replications, cfg.workers, [&](std::size_t r) {
    RngStream rng(cfg.master_seed, r);
    const Realization real = simulate(cfg.sim, rng);
    if (real.truncated() || !real.survived()) return;
    for (std::size_t i = 0; i < nt; ++i) {
      values[r][i] = stats::overlap_mass(real, beta, report.times[i], a);
    }
  });

  // Regime-specific polynomial prefactor removed before the fit.
  double log_weight = 0.0;
  switch (report.regime) {
    case limits::Regime::kSubcritical:
      report.expected_slope = -(1.0 - beta * beta) * a;
      break;
    case limits::Regime::kBoundary:
      report.expected_slope = -a / 2.0;
      log_weight = 0.5;
      break;
    case limits::Regime::kExtremal:
      report.expected_slope = -(kSqrt2 - beta) * (kSqrt2 - beta) * a;
      log_weight = 3.0 * beta / kSqrt2;
      break;
  }

  std::vector<double> y, sigma, y_median, sigma_median;
  bool enough = true;
  for (std::size_t i = 0; i < nt; ++i) {
    std::vector<double> column;
    for (const auto& row : values) column.push_back(row[i]);
    const stat::Summary s = stat::summarize(column);
    const auto [median, median_se] = median_with_se(column);
    report.mean_mass.push_back(s.mean);
    report.mean_mass_se.push_back(s.std_error);
    report.median_mass.push_back(median);
    report.median_mass_se.push_back(median_se);
    report.survivors.push_back(s.count);
    if (s.count < cfg.tests.min_survivors || !(s.mean > 0.0) ||
        !(median > 0.0)) {
      enough = false;
    }
    const double prefactor = log_weight * std::log(a * report.times[i]);
    y.push_back(std::log(s.mean) + prefactor);
    sigma.push_back(s.std_error / s.mean);
    y_median.push_back(std::log(median) + prefactor);
    sigma_median.push_back(median_se / median);
  }

  Verdict v;
  v.check = "overlap_decay";
  v.claim = "slope of ln E nu([a,1]) in t, beta = " + fmt(beta) +
            ", a = " + fmt(a) + ", regime " + limits::to_string(report.regime);
  v.expected = report.expected_slope;
  v.threshold = os.slope_tolerance * std::abs(report.expected_slope);
  if (!enough) {
    v.status = VerdictStatus::kInconclusive;
    v.measured = std::nan("");
    v.std_error = std::nan("");
    v.detail = "fewer than " + std::to_string(cfg.tests.min_survivors) +
               " surviving replications at some horizon";
    report.verdicts.push_back(v);
    return report;
  }
  report.fit = stat::fit_line(report.times, y, sigma);
  v.measured = report.fit.slope;
  v.std_error = report.fit.slope_se;
  v.status = std::abs(v.measured - v.expected) <= v.threshold
                 ? VerdictStatus::kPass
                 : VerdictStatus::kFail;
  std::ostringstream d;
  d << "relative tolerance " << os.slope_tolerance << "; survivors";
  for (const auto n : report.survivors) d << ' ' << n;
  d << "; means";
  for (const double m : report.mean_mass) d << ' ' << m;
  v.detail = d.str();
  report.verdicts.push_back(v);

  report.median_fit = stat::fit_line(report.times, y_median, sigma_median);
  Verdict m = v;
  m.check = "overlap_decay_median";
  m.claim = "slope of ln median nu([a,1]) in t, beta = " + fmt(beta) +
            ", a = " + fmt(a) + ", regime " + limits::to_string(report.regime);
  m.measured = report.median_fit.slope;
  m.std_error = report.median_fit.slope_se;
  m.status = std::abs(m.measured - m.expected) <= m.threshold
                 ? VerdictStatus::kPass
                 : VerdictStatus::kFail;
  std::ostringstream md;
  md << "relative tolerance " << os.slope_tolerance << "; medians";
  for (const double x : report.median_mass) md << ' ' << x;
  m.detail = md.str();
  report.verdicts.push_back(m);

  if (report.regime == limits::Regime::kExtremal) {
    const double t = report.times.back();
    const double scale = std::pow(a * t, log_weight) *
                         std::exp((kSqrt2 - beta) * (kSqrt2 - beta) * a * t);
    std::vector<double> rescaled;
    for (const auto& row : values) rescaled.push_back(scale * row.back());
    Verdict h;
    h.check = "overlap_decay";
    h.claim = "Hill index of rescaled overlap mass = sqrt2/(2 beta)";
    h.expected = kSqrt2 / (2.0 * beta);
    h.std_error = std::nan("");
    h.threshold = os.hill_tolerance;
    try {
      report.hill = limits::hill_sensitivity(rescaled, os.hill_fractions);
      h.measured = report.hill.front().estimate;
      for (const auto& e : report.hill) {
        if (std::abs(e.fraction - 0.01) < 1e-12) h.measured = e.estimate;
      }
      h.status = std::abs(h.measured - h.expected) <= h.threshold
                     ? VerdictStatus::kPass
                     : VerdictStatus::kFail;
    } catch (const ArgumentError& e) {
      h.status = VerdictStatus::kInconclusive;
      h.detail = e.what();
    }
    report.verdicts.push_back(h);
  }
  return report;
}

// --- Limit-object self-tests ----------------------------------------------

std::vector<Verdict> limits_selftest(const SelfTestSettings& st) {
  std::vector<Verdict> out;
  auto stream = [&](std::uint64_t i) {
    return RngStream(st.master_seed, stream_range::kSelfTestBase + i);
  };

  {
    const StableSpec spec{st.stable_alpha, 1.0};
    std::vector<double> kanter(st.stable_draws), series(st.stable_draws);
    RngStream r0 = stream(0);
    RngStream r1 = stream(1);
    for (auto& x : kanter) x = sample_stable_positive(spec, r0, StableMethod::kKanter);
    for (auto& x : series) {
      x = sample_stable_positive(spec, r1, StableMethod::kPoissonSeries);
    }
    const stat::TestResult ks = stat::ks_two_sample(kanter, series);
    out.push_back(p_value_verdict(
        "limits_selftest",
        "positive-stable Kanter vs Poisson series, alpha = " + fmt(st.stable_alpha),
        ks.p_value, st.significance,
        "two-sample KS D = " + fmt(ks.statistic) + ", n = " +
            std::to_string(st.stable_draws) + " per method"));
  }

  {
    limits::GumbelMixtureSpec spec{{0.5, 1.0, 2.0}, 1.3};
    RngStream rng = stream(2);
    std::vector<double> draws(st.gumbel_draws);
    for (auto& x : draws) x = limits::sample_limit_maximum(spec, rng);
    std::sort(draws.begin(), draws.end());
    const double median = stat::quantile_sorted(draws, 0.5);
    auto cdf_gap = [&](double x) { return limits::limit_maximum_cdf(spec, x) - 0.5; };
    std::uintmax_t iters = 200;
    const auto bracket = boost::math::tools::toms748_solve(
        cdf_gap, -20.0, 20.0, boost::math::tools::eps_tolerance<double>(50),
        iters);
    const double exact = 0.5 * (bracket.first + bracket.second);
    double density = 0.0;
    for (const double z : spec.z_samples) {
      const double u = spec.C * z * std::exp(-kSqrt2 * exact);
      density += std::exp(-u) * u * kSqrt2;
    }
    density /= static_cast<double>(spec.z_samples.size());
    const double se =
        1.0 / (2.0 * density * std::sqrt(static_cast<double>(draws.size())));
    out.push_back(mean_verdict("limits_selftest",
                               "Gumbel-mixture median = closed-form root",
                               exact, median, se, st.se_multiplier));
  }

  {
    RngStream rng = stream(3);
    std::vector<double> pareto(st.pareto_draws);
    for (auto& x : pareto) x = std::pow(rng.uniform_open(), -1.0 / st.pareto_alpha);
    const double hill = limits::hill_tail_index(pareto, st.pareto_k);
    Verdict v;
    v.check = "limits_selftest";
    v.claim = "Hill index on exact Pareto(" + fmt(st.pareto_alpha) + ")";
    v.expected = st.pareto_alpha;
    v.measured = hill;
    v.std_error = st.pareto_alpha / std::sqrt(static_cast<double>(st.pareto_k));
    v.threshold = st.hill_tolerance;
    v.status = std::abs(hill - st.pareto_alpha) <= st.hill_tolerance
                   ? VerdictStatus::kPass
                   : VerdictStatus::kFail;
    v.detail = "k = " + std::to_string(st.pareto_k) + ", n = " +
               std::to_string(st.pareto_draws);
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace bbm::experiments
