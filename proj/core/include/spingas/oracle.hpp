#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "spingas/interaction_graph.hpp"
#include "spingas/random.hpp"

namespace spingas {

/// Random graph on n particles: each pair is coupled with probability
/// `edge_probability`, phases uniform in [0.1, 2π - 0.1] so no edge is
/// accidentally ineffective.
InteractionGraph random_graph(std::size_t n, double edge_probability, Rng& rng);

struct OracleReport {
  std::size_t trials = 0;
  std::size_t max_particles = 0;
  double max_deviation = 0.0;      ///< largest |ρ_A - ρ_A^brute| entry seen
  std::size_t rdm_failures = 0;    ///< trials above the tolerance
  std::size_t criterion_failures = 0;  ///< graph criterion disagreed with rank
  double seconds = 0.0;
  bool passed() const noexcept { return rdm_failures == 0 && criterion_failures == 0; }
  std::string summary() const;
};

inline constexpr double kOracleTolerance = 1e-10;

/// Random graphs with 2 ≤ N ≤ max_particles and a random proper subset A.
/// Compares the Hadamard-product engine against the full-state partial trace
/// and the graph entanglement criterion against rank ρ_A > 1 (via purity).
OracleReport run_oracle_check(std::size_t max_particles, std::size_t trials, std::uint64_t seed);

}  // namespace spingas
