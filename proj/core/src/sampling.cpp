#include "bbm/sampling.hpp"

#include <algorithm>
#include <sstream>

namespace bbm {

OffspringDistribution::OffspringDistribution(
    const std::map<int, double>& weights) {
  if (weights.empty()) {
    throw ValidationError("offspring distribution: no weights given");
  }
  if (weights.begin()->first < 0) {
    throw ValidationError(
        "offspring distribution: support must be non-negative integers");
  }
  const int kmax = weights.rbegin()->first;
  weights_.assign(static_cast<std::size_t>(kmax) + 1, 0.0);
  for (const auto& [k, w] : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      std::ostringstream msg;
      msg << "offspring distribution: weight of k=" << k
          << " must be finite and non-negative";
      throw ValidationError(msg.str());
    }
    weights_[static_cast<std::size_t>(k)] = w;
  }

  double total = 0.0;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    const double w = weights_[k];
    const double kd = static_cast<double>(k);
    total += w;
    mean_ += kd * w;
    factorial_moment_ += kd * (kd - 1.0) * w;
  }
  if (std::abs(total - 1.0) > kTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "offspring distribution: normalization violated, weights sum to "
        << total << " (must be 1 within " << kTolerance << ")";
    throw ValidationError(msg.str());
  }
  if (std::abs(mean_ - 2.0) > kTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "offspring distribution: mean violated, sum k*mu(k) = " << mean_
        << " (must be 2 within " << kTolerance << ")";
    throw ValidationError(msg.str());
  }

  cumulative_.resize(weights_.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    acc += weights_[k];
    cumulative_[k] = acc;
  }
  cumulative_.back() = 1.0;

  for (std::size_t k = 0; k < weights_.size(); ++k) {
    if (weights_[k] == 1.0) deterministic_ = static_cast<int>(k);
  }
}

OffspringDistribution OffspringDistribution::binary() {
  return OffspringDistribution({{2, 1.0}});
}

double OffspringDistribution::weight(int k) const noexcept {
  if (k < 0 || k > max_offspring()) return 0.0;
  return weights_[static_cast<std::size_t>(k)];
}

int OffspringDistribution::quantile(double u) const noexcept {
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto k = std::distance(cumulative_.begin(), it);
  return static_cast<int>(std::min<std::ptrdiff_t>(k, max_offspring()));
}

std::map<int, double> OffspringDistribution::weights() const {
  std::map<int, double> out;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    if (weights_[k] > 0.0) out[static_cast<int>(k)] = weights_[k];
  }
  return out;
}

OffspringMoments offspring_moments(const OffspringDistribution& dist) {
  return {dist.mean(), dist.factorial_moment()};
}

std::vector<double> sample_exponential_ppp(double floor, RngStream& rng) {
  if (!std::isfinite(floor)) {
    throw ArgumentError("sample_exponential_ppp: floor must be finite");
  }
  // Atom at x has Γ = e^{-√2 x}; atoms above the floor have Γ <= limit.
  const double limit = std::exp(-std::numbers::sqrt2 * floor);
  std::vector<double> atoms;
  boost::random::exponential_distribution<double> exp1;
  double gamma = exp1(rng);
  while (gamma <= limit) {
    atoms.push_back(-std::log(gamma) / std::numbers::sqrt2);
    gamma += exp1(rng);
  }
  return atoms;
}

void StableSpec::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("stable spec: alpha must lie strictly in (0, 1)");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ValidationError("stable spec: scale must be finite and > 0");
  }
}

double stable_series_truncated_mean(double alpha, double floor) {
  // In y = e^{βp} coordinates the intensity is α y^{-1-α} dy, and the floor
  // maps to y_f = e^{β floor} with β = √2/α.
  const double log_yf = std::numbers::sqrt2 / alpha * floor;
  return alpha / (1.0 - alpha) * std::exp((1.0 - alpha) * log_yf);
}

namespace {

double kanter_unit(double alpha, RngStream& rng) {
  boost::random::exponential_distribution<double> exp1;
  const double u = std::numbers::pi * rng.uniform_open();
  double e;
  do {
    e = exp1(rng);
  } while (!(e > 0.0));
  const double log_s = std::log(std::sin(alpha * u)) -
                       std::log(std::sin(u)) / alpha +
                       (1.0 - alpha) / alpha *
                           (std::log(std::sin((1.0 - alpha) * u)) - std::log(e));
  // Rescale from Laplace exp(-λ^α) to exp(-Γ(1-α) λ^α).
  return std::exp(log_s + std::lgamma(1.0 - alpha) / alpha);
}

double series_unit(double alpha, RngStream& rng,
                   const PoissonSeriesOptions& opts) {
  const double beta = std::numbers::sqrt2 / alpha;
  double sum = 0.0;
  for (const double p : sample_exponential_ppp(opts.floor, rng)) {
    sum += std::exp(beta * p);
  }
  if (opts.compensate) sum += stable_series_truncated_mean(alpha, opts.floor);
  return sum;
}

}  // namespace

double sample_stable_positive(const StableSpec& spec, RngStream& rng,
                              StableMethod method,
                              const PoissonSeriesOptions& series) {
  spec.validate();
  const double unit = method == StableMethod::kKanter
                          ? kanter_unit(spec.alpha, rng)
                          : series_unit(spec.alpha, rng, series);
  return std::pow(spec.scale, 1.0 / spec.alpha) * unit;
}

}  // namespace bbm
