#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "bbm/simulation.hpp"

namespace bbm::testing {

/// Death time of the last common ancestor of u != v, found by marking
/// every ancestor of u and walking v's parent chain until a mark is hit.
double chain_lca_death_time(const Realization& real, ParticleIndex u,
                            ParticleIndex v);

/// ν_{β,t}([a,1]) as the explicit double sum over ordered pairs of N(t),
/// u = v included, with d_{u∧v} > a·t for u != v. O(n(t)²).
double pairwise_overlap(const Realization& real, double beta, double t,
                        double a);

/// Σ_{u != v ∈ N(t)} f(d_{u∧v}) over ordered pairs. O(n(t)²).
double pairwise_death_functional(const Realization& real, double t,
                                 const std::function<double(double)>& f);

/// Number of particles with b_u <= t < d_u, by a scan of the arena.
std::size_t scan_alive_count(const Realization& real, double t);

struct OracleAgreement {
  std::size_t trees = 0;
  std::size_t comparisons = 0;
  double max_relative_error = 0.0;
  std::string worst;  // which quantity and tree hit the maximum
};

/// Simulates seeded binary trees to t = 4 and keeps the first `trees` with
/// 2 <= n(t) <= max_alive. On each, compares the grouped overlap, the
/// per-branching-event pair route to the overlap, and the grouped death
/// functional against the pairwise sums.
OracleAgreement compare_grouped_with_pairwise(std::uint64_t seed,
                                              std::size_t trees,
                                              std::size_t max_alive = 200);

}  // namespace bbm::testing
