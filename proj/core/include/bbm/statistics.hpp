#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bbm/simulation.hpp"

namespace bbm::stats {

using ScalarFunction = std::function<double(double)>;

/// c(β) = 1 + β²/2, the growth exponent of E Σ e^{βX_u(t)}.
inline constexpr double growth_exponent(double beta) noexcept {
  return 1.0 + 0.5 * beta * beta;
}

/// Sorted, duplicate-free inverse temperatures, all finite and >= 0.
class BetaGrid {
 public:
  explicit BetaGrid(std::vector<double> values);

  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

 private:
  std::vector<double> values_;
};

/// log Σ_{u∈N(t)} e^{βX_u(t)}; -inf for an empty snapshot.
double log_partition_sum(const Snapshot& snap, double beta);

/// W_t(β) = e^{-c(β)t} Σ e^{βX_u(t)}.
double additive_martingale(const Snapshot& snap, double beta);

/// Z_t(β) = e^{-c(β)t} Σ (X_u(t) - βt) e^{βX_u(t)} = ∂W_t/∂β.
double derivative_martingale(const Snapshot& snap, double beta);

/// e^{-c(β)t} Σ |X_u(t) - βt| e^{βX_u(t)}: the scale against which the
/// derivative martingale's rounding error is measured.
double derivative_martingale_magnitude(const Snapshot& snap, double beta);

/// W_t(β, f) = Σ e^{βX_u(t) - c(β)t} f((X_u(t) - βt)/√t). Needs t > 0.
double functional_martingale(const Snapshot& snap, double beta,
                             const ScalarFunction& f);

/// V_t = √t e^{-(1-β²/2)t} Σ f(X_u(t) - βt).
double growth_statistic(const Snapshot& snap, double beta,
                        const ScalarFunction& f);

/// M(t). Throws UndefinedValueError on an empty snapshot.
double max_displacement(const Snapshot& snap);

/// m(t) = √2 t - (3/(2√2)) ln t, t > 0.
double centering(double t);

/// #{u ∈ N(t) : X_u(t) - m(t) >= x}.
std::size_t extremal_count(const Snapshot& snap, double x);

/// Σ_{u∈N(t)} F(X_u(t)).
double particle_sum(const Snapshot& snap, const ScalarFunction& f);

/// ν_{β,t}([a,1]): the Gibbs-pair mass whose common ancestor is still
/// alive at time at. Particles of N(t) are grouped by their ancestor in
/// N(at); the squared group sums (log-sum-exp per group) are divided by
/// W_t(β)². Cost is O(n(t)·depth), never quadratic.
///
/// Returns NaN when N(t) is empty. Throws LookupError if t or a·t is not a
/// snapshot time, ArgumentError if a ∉ (0,1) or genealogy was not retained.
double overlap_mass(const Realization& real, double beta, double t, double a);

/// ν_{β,t}([a,1]) for each a in a sorted grid; non-increasing in a.
std::vector<double> overlap_cdf(const Realization& real, double beta,
                                 double t, std::span<const double> a_grid);

/// Σ_{u≠v∈N(t)} e^{β(X_u+X_v)} g(d_{u∧v}) / W̃², with W̃ = Σ_u e^{βX_u},
/// aggregated per branching event from subtree weight sums. An independent
/// route to the overlap: ν([a,1]) = diagonal + this with g = 1{d > at}.
/// NaN when N(t) is empty.
double normalized_pair_functional(const Realization& real, double beta,
                                  double t, const ScalarFunction& g);

/// Σ_u e^{2βX_u} / W̃²: the u = v part of the overlap, located at 1.
double overlap_diagonal(const Snapshot& snap, double beta);

/// Diagonal plus all off-diagonal pair mass; identically 1 up to rounding.
double overlap_total_mass(const Realization& real, double beta, double t);

/// Σ_{u≠v∈N(t)} f(d_{u∧v}), aggregated per branching event: a particle
/// dying at τ <= t whose children have n_1..n_k descendants alive at t
/// contributes f(τ)·((Σ n_i)² - Σ n_i²). Linear in the arena size.
double death_functional(const Realization& real, double t,
                        const ScalarFunction& f);

/// Number of lineages alive at some time in [s, t], where a branching
/// particle continues as its first child: n(t) plus the number of
/// childless deaths in (s, t].
double lineage_count(const Realization& real, double s, double t);

/// Number of distinct particles (Ulam-Harris nodes) alive at some time in
/// [s, t]: b_u <= t and d_u > s.
double particles_alive_during(const Realization& real, double s, double t);

/// Largest X_u(t) - slope·t over all stored snapshots; -inf if all empty.
double running_max_excess(const Realization& real, double slope);

/// One statistic along a time grid for a single realization.
struct StatisticSeries {
  std::string name;
  double beta = 0.0;
  double a = 0.0;
  std::string function_id;
  std::vector<double> times;
  std::vector<double> values;  // NaN where undefined
  std::vector<bool> undefined;

  void push(double t, double value);
};

/// Delimited rows: replication, statistic, beta, a, t, value, survived.
void write_series_header(std::ostream& out);
void write_series_rows(std::ostream& out, std::size_t replication,
                       const StatisticSeries& series, bool survived);

}  // namespace bbm::stats
