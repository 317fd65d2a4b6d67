#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <span>
#include <vector>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "bbm/errors.hpp"
#include "bbm/rng.hpp"

namespace bbm {

/// Critical inverse temperature.
inline constexpr double kBetaCritical = std::numbers::sqrt2;

/// Offspring law μ on {0, 1, ..., k_max}.
///
/// Only finite supports are accepted, which makes the second moment finite
/// by construction. The mean must equal 2 to within 1e-12.
class OffspringDistribution {
 public:
  static constexpr double kTolerance = 1e-12;

  /// Throws ValidationError naming the violated invariant.
  explicit OffspringDistribution(const std::map<int, double>& weights);

  /// μ = δ₂.
  static OffspringDistribution binary();

  double weight(int k) const noexcept;
  int max_offspring() const noexcept {
    return static_cast<int>(weights_.size()) - 1;
  }
  double mean() const noexcept { return mean_; }
  /// K = Σ μ(k) k (k - 1), the factorial second moment.
  double factorial_moment() const noexcept { return factorial_moment_; }
  double extinction_weight() const noexcept { return weights_.front(); }

  /// Non-zero only when the law is a point mass.
  int deterministic_count() const noexcept { return deterministic_; }

  /// Inverse-CDF lookup; u in [0, 1).
  int quantile(double u) const noexcept;

  std::map<int, double> weights() const;

 private:
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  double mean_ = 0.0;
  double factorial_moment_ = 0.0;
  int deterministic_ = 0;
};

struct OffspringMoments {
  double mean;
  double factorial_moment;  // K
};

OffspringMoments offspring_moments(const OffspringDistribution& dist);

/// Draws a child count. Point-mass laws consume no randomness.
inline int sample_offspring(const OffspringDistribution& dist,
                            RngStream& rng) {
  if (const int k = dist.deterministic_count(); k > 0) return k;
  return dist.quantile(rng.uniform_open());
}

/// Exp(1) lifetime, strictly positive.
inline double sample_lifetime(RngStream& rng) {
  boost::random::exponential_distribution<double> exp1;
  double x;
  do {
    x = exp1(rng);
  } while (!(x > 0.0));
  return x;
}

/// Normal(0, dt) displacement; dt == 0 gives exactly 0 without a draw.
inline double sample_gaussian_increment(double dt, RngStream& rng) {
  if (dt < 0.0 || std::isnan(dt)) {
    throw ArgumentError("sample_gaussian_increment: dt must be >= 0");
  }
  if (dt == 0.0) return 0.0;
  boost::random::normal_distribution<double> std_normal;
  return std::sqrt(dt) * std_normal(rng);
}

/// Atoms of a Poisson point process with intensity √2 e^{-√2 x} dx on
/// [floor, ∞), in decreasing order. The count is Poisson with mean
/// e^{-√2 floor}. Atoms are generated as p_k = -ln(Γ_k)/√2 where Γ_k are
/// the arrival times of a unit-rate Poisson process.
std::vector<double> sample_exponential_ppp(double floor, RngStream& rng);

/// One-sided α-stable law with Laplace transform
/// E[e^{-λS}] = exp(-scale · Γ(1-α) · λ^α),  0 < α < 1.
struct StableSpec {
  double alpha;
  double scale = 1.0;

  void validate() const;
};

enum class StableMethod {
  /// Kanter's representation: closed form in one uniform and one Exp(1).
  kKanter,
  /// Σ e^{β p_i} over exponential-PPP atoms with β = √2/α (the construction
  /// of the extremal limit), truncated at a floor and compensated.
  kPoissonSeries,
};

struct PoissonSeriesOptions {
  /// Truncation level for the PPP. The expected atom count is
  /// e^{-√2·floor}; the default gives 2000 atoms per draw.
  double floor = -std::log(2000.0) / std::numbers::sqrt2;
  /// Add the mean of the discarded atoms below the floor. That mass has
  /// mean α/(1-α)·y^{1-α} and standard deviation O(y^{1-α/2}) where
  /// y = e^{β·floor}, so the residual error is far below sampling noise.
  bool compensate = true;
};

double sample_stable_positive(const StableSpec& spec, RngStream& rng,
                              StableMethod method = StableMethod::kKanter,
                              const PoissonSeriesOptions& series = {});

/// Mean mass of the Poisson series lying strictly below `floor` for the
/// unit-scale law (before the scale^{1/α} factor).
double stable_series_truncated_mean(double alpha, double floor);

}  // namespace bbm
