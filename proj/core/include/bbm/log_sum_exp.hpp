#pragma once

#include <cmath>
#include <cstddef>
#include <limits>

namespace bbm {

// Streaming log(Σ exp(x_i)) with a running maximum. The result depends on
// the insertion order only through rounding, and the order is always the
// caller's (fixed) iteration order.
class LogSumExp {
 public:
  void add(double log_term) noexcept {
    if (log_term == -kInf) return;
    if (log_term <= max_) {
      sum_ += std::exp(log_term - max_);
    } else {
      sum_ = (max_ == -kInf) ? 1.0 : sum_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    }
  }

  void merge(const LogSumExp& other) noexcept {
    if (other.max_ == -kInf) return;
    if (other.max_ <= max_) {
      sum_ += other.sum_ * std::exp(other.max_ - max_);
    } else {
      sum_ = (max_ == -kInf) ? other.sum_
                             : sum_ * std::exp(max_ - other.max_) + other.sum_;
      max_ = other.max_;
    }
  }

  /// -inf when empty.
  double log() const noexcept {
    return max_ == -kInf ? -kInf : max_ + std::log(sum_);
  }
  bool empty() const noexcept { return max_ == -kInf; }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  double max_ = -kInf;
  double sum_ = 0.0;
};

// Σ s_i exp(x_i) for signs s_i ∈ {-1, +1}, kept as two log-sums.
class SignedLogSum {
 public:
  void add(double coefficient, double log_weight) noexcept {
    if (coefficient > 0.0) {
      pos_.add(std::log(coefficient) + log_weight);
    } else if (coefficient < 0.0) {
      neg_.add(std::log(-coefficient) + log_weight);
    }
  }

  /// exp(log_scale) · Σ s_i exp(x_i).
  double value(double log_scale = 0.0) const noexcept {
    return std::exp(pos_.log() + log_scale) - std::exp(neg_.log() + log_scale);
  }
  /// exp(log_scale) · Σ |s_i| exp(x_i).
  double magnitude(double log_scale = 0.0) const noexcept {
    return std::exp(pos_.log() + log_scale) + std::exp(neg_.log() + log_scale);
  }

 private:
  LogSumExp pos_;
  LogSumExp neg_;
};

}  // namespace bbm
