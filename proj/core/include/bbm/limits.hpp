#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bbm/rng.hpp"

namespace bbm::limits {

/// Law of (G + ln(C·Z))/√2 with G standard Gumbel and Z drawn uniformly
/// from empirical Z_∞ proxies. C is not known in closed form and is carried
/// as a fit parameter.
struct GumbelMixtureSpec {
  std::vector<double> z_samples;
  double C = 1.0;

  void validate() const;
};

double sample_limit_maximum(const GumbelMixtureSpec& spec, RngStream& rng);

/// P(limit <= x) = mean over z of exp(-C z e^{-√2 x}).
double limit_maximum_cdf(const GumbelMixtureSpec& spec, double x);

enum class Regime {
  kSubcritical,  // 0 <= β < √2/2
  kBoundary,     // β = √2/2
  kExtremal,     // √2/2 < β < √2
};

std::string to_string(Regime regime);

struct FluctuationSpec {
  Regime regime;
  double beta;
  double K;  // Σ μ(k) k (k-1)

  /// Classifies β; the boundary is matched to within 1e-12.
  static FluctuationSpec for_beta(double beta, double K);
  void validate() const;

  /// Tail index of the extremal-regime limit, √2/β.
  double stable_index() const;
};

/// σ² of the Gaussian regimes:
///   subcritical: (K/(1-β²) - 1)·W_∞(2β)
///   boundary:    (2K - 1)·√(2/π)·Z_∞
/// Throws ArgumentError for the extremal regime.
double gaussian_fluctuation_variance(const FluctuationSpec& spec,
                                     double w_or_z);

/// Rate prefactor: e^{(1-β²)t/2}, t^{1/4} e^{t/4}, or e^{c(β)t - βm(t)}.
double fluctuation_rate(const FluctuationSpec& spec, double t);

/// rate(t) · (w_inf_proxy - w_t).
double rescale_fluctuation(const FluctuationSpec& spec, double t, double w_t,
                           double w_inf_proxy);

/// √t · W_t(√2) · √(π/2), the Z_∞ proxy at horizon t.
double z_infinity_proxy(double t, double w_t_critical);

/// Gap Δ with e^{-(1-β²)Δ/2} <= tolerance, for the subcritical W_∞ proxy
/// W_{t+Δ}(β).
double subcritical_proxy_gap(double beta, double tolerance = 0.05);

/// Point process of cluster offsets attached to each Poisson atom.
class Decoration {
 public:
  virtual ~Decoration() = default;
  virtual std::vector<double> sample(RngStream& rng) const = 0;
};

/// A single atom at 0.
class TrivialDecoration final : public Decoration {
 public:
  std::vector<double> sample(RngStream&) const override { return {0.0}; }
};

/// Atoms p_i + Δ_ij + ln(C·z)/√2 of the limiting extremal process, sorted
/// in decreasing order, for PPP atoms p_i above floor - ln(C·z)/√2 (so all
/// returned atoms lie above `floor` before decoration).
std::vector<double> sample_limit_extremal_atoms(
    double z_proxy, double C, double floor, RngStream& rng,
    const Decoration& decoration = TrivialDecoration{});

/// Hill estimator over the k largest order statistics:
///   k / Σ_{i=1..k} ln(X_(i) / X_(k+1)).
/// Non-positive entries are ignored. Throws ArgumentError if fewer than
/// k+1 positive samples remain, and UndefinedValueError if the log-spacings
/// sum to zero.
double hill_tail_index(std::span<const double> samples, std::size_t k);

struct HillSensitivity {
  std::size_t k;
  double fraction;
  double estimate;
};

/// Hill estimates at k = fraction · n for each fraction (at least 1), where
/// n counts all finite samples, positive or not.
std::vector<HillSensitivity> hill_sensitivity(
    std::span<const double> samples, std::span<const double> fractions);

}  // namespace bbm::limits
