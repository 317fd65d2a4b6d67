#include "bbm/limits.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "bbm/errors.hpp"
#include "bbm/sampling.hpp"
#include "bbm/statistics.hpp"

namespace bbm::limits {
namespace {

constexpr double kBoundary = std::numbers::sqrt2 / 2.0;
constexpr double kBoundaryTolerance = 1e-12;

}  // namespace

void GumbelMixtureSpec::validate() const {
  if (z_samples.empty()) {
    throw ArgumentError("gumbel mixture: z_samples is empty");
  }
  for (const double z : z_samples) {
    if (!(z > 0.0) || !std::isfinite(z)) {
      throw ValidationError("gumbel mixture: every z sample must be > 0");
    }
  }
  if (!(C > 0.0) || !std::isfinite(C)) {
    throw ValidationError("gumbel mixture: C must be > 0");
  }
}

double sample_limit_maximum(const GumbelMixtureSpec& spec, RngStream& rng) {
  spec.validate();
  // G = -ln E is standard Gumbel for E ~ Exp(1).
  const double gumbel = -std::log(sample_lifetime(rng));
  const auto n = spec.z_samples.size();
  const auto idx = std::min<std::size_t>(
      static_cast<std::size_t>(rng.uniform_open() * static_cast<double>(n)),
      n - 1);
  return (gumbel + std::log(spec.C * spec.z_samples[idx])) /
         std::numbers::sqrt2;
}

double limit_maximum_cdf(const GumbelMixtureSpec& spec, double x) {
  spec.validate();
  double acc = 0.0;
  for (const double z : spec.z_samples) {
    acc += std::exp(-spec.C * z * std::exp(-std::numbers::sqrt2 * x));
  }
  return acc / static_cast<double>(spec.z_samples.size());
}

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::kSubcritical:
      return "subcritical";
    case Regime::kBoundary:
      return "boundary";
    case Regime::kExtremal:
      return "extremal";
  }
  return "unknown";
}

FluctuationSpec FluctuationSpec::for_beta(double beta, double K) {
  Regime regime = Regime::kExtremal;
  if (std::abs(beta - kBoundary) <= kBoundaryTolerance) {
    regime = Regime::kBoundary;
  } else if (beta < kBoundary) {
    regime = Regime::kSubcritical;
  }
  FluctuationSpec spec{regime, beta, K};
  spec.validate();
  return spec;
}

void FluctuationSpec::validate() const {
  if (!(K >= 0.0)) throw ValidationError("fluctuation spec: K must be >= 0");
  bool ok = false;
  switch (regime) {
    case Regime::kSubcritical:
      ok = beta >= 0.0 && beta < kBoundary - kBoundaryTolerance;
      break;
    case Regime::kBoundary:
      ok = std::abs(beta - kBoundary) <= kBoundaryTolerance;
      break;
    case Regime::kExtremal:
      ok = beta > kBoundary + kBoundaryTolerance &&
           beta < std::numbers::sqrt2;
      break;
  }
  if (!ok) {
    throw ValidationError("fluctuation spec: beta = " + std::to_string(beta) +
                          " is outside the " + to_string(regime) +
                          " regime");
  }
}

double FluctuationSpec::stable_index() const {
  return std::numbers::sqrt2 / beta;
}

double gaussian_fluctuation_variance(const FluctuationSpec& spec,
                                     double w_or_z) {
  spec.validate();
  if (!(w_or_z >= 0.0)) {
    throw ArgumentError("gaussian_fluctuation_variance: proxy must be >= 0");
  }
  switch (spec.regime) {
    case Regime::kSubcritical:
      return (spec.K / (1.0 - spec.beta * spec.beta) - 1.0) * w_or_z;
    case Regime::kBoundary:
      return (2.0 * spec.K - 1.0) * std::sqrt(2.0 / std::numbers::pi) *
             w_or_z;
    case Regime::kExtremal:
      break;
  }
  throw ArgumentError(
      "gaussian_fluctuation_variance: unsupported regime 'extremal' (the "
      "limit is stable, not Gaussian)");
}

double fluctuation_rate(const FluctuationSpec& spec, double t) {
  if (!(t > 0.0)) throw ArgumentError("fluctuation_rate: t must be > 0");
  const double b = spec.beta;
  switch (spec.regime) {
    case Regime::kSubcritical:
      return std::exp(0.5 * (1.0 - b * b) * t);
    case Regime::kBoundary:
      return std::pow(t, 0.25) * std::exp(0.25 * t);
    case Regime::kExtremal:
      return std::exp(stats::growth_exponent(b) * t - b * stats::centering(t));
  }
  return 0.0;
}

double rescale_fluctuation(const FluctuationSpec& spec, double t, double w_t,
                           double w_inf_proxy) {
  return fluctuation_rate(spec, t) * (w_inf_proxy - w_t);
}

double z_infinity_proxy(double t, double w_t_critical) {
  return std::sqrt(t) * w_t_critical * std::sqrt(std::numbers::pi / 2.0);
}

double subcritical_proxy_gap(double beta, double tolerance) {
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw ArgumentError("subcritical_proxy_gap: need 0 <= beta < 1");
  }
  if (!(tolerance > 0.0 && tolerance < 1.0)) {
    throw ArgumentError("subcritical_proxy_gap: tolerance must be in (0,1)");
  }
  return -2.0 * std::log(tolerance) / (1.0 - beta * beta);
}

std::vector<double> sample_limit_extremal_atoms(double z_proxy, double C,
                                                double floor, RngStream& rng,
                                                const Decoration& decoration) {
  if (!(z_proxy > 0.0) || !(C > 0.0)) {
    throw ArgumentError("sample_limit_extremal_atoms: need z_proxy, C > 0");
  }
  const double shift = std::log(C * z_proxy) / std::numbers::sqrt2;
  std::vector<double> atoms;
  for (const double p : sample_exponential_ppp(floor - shift, rng)) {
    for (const double d : decoration.sample(rng)) {
      atoms.push_back(p + d + shift);
    }
  }
  std::sort(atoms.begin(), atoms.end(), std::greater<>());
  return atoms;
}

double hill_tail_index(std::span<const double> samples, std::size_t k) {
  std::vector<double> positive;
  positive.reserve(samples.size());
  for (const double x : samples) {
    if (x > 0.0 && std::isfinite(x)) positive.push_back(x);
  }
  if (k < 1 || positive.size() < k + 1) {
    throw ArgumentError("hill_tail_index: need at least k+1 positive samples (k=" +
                        std::to_string(k) + ", have " +
                        std::to_string(positive.size()) + ")");
  }
  std::nth_element(positive.begin(), positive.begin() + static_cast<long>(k),
                   positive.end(), std::greater<>());
  const double threshold = positive[k];
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += std::log(positive[i] / threshold);
  if (!(sum > 0.0)) {
    throw UndefinedValueError(
        "hill_tail_index: log-spacings sum to zero (degenerate samples)");
  }
  return static_cast<double>(k) / sum;
}

std::vector<HillSensitivity> hill_sensitivity(
    std::span<const double> samples, std::span<const double> fractions) {
  const auto n = static_cast<double>(std::count_if(
      samples.begin(), samples.end(), [](double x) { return std::isfinite(x); }));
  std::vector<HillSensitivity> out;
  for (const double f : fractions) {
    const auto k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(f * n)));
    out.push_back({k, f, hill_tail_index(samples, k)});
  }
  return out;
}

}  // namespace bbm::limits
