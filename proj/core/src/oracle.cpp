#include "spingas/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "spingas/errors.hpp"
#include "spingas/quantum_state.hpp"

namespace spingas {

InteractionGraph random_graph(std::size_t n, double edge_probability, Rng& rng) {
  InteractionGraph g(n);
  const double span = 2.0 * std::numbers::pi - 0.2;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = k + 1; l < n; ++l) {
      if (rng.uniform() < edge_probability) g.add_phase(k, l, 0.1 + span * rng.uniform());
    }
  }
  return g;
}

std::string OracleReport::summary() const {
  std::ostringstream out;
  out << (passed() ? "PASS" : "FAIL") << " oracle-check: " << trials << " graphs, N <= "
      << max_particles << ", max |drho| = " << max_deviation << " (tol " << kOracleTolerance
      << "), rdm failures " << rdm_failures << ", criterion failures " << criterion_failures
      << ", " << seconds << " s";
  return out.str();
}

OracleReport run_oracle_check(std::size_t max_particles, std::size_t trials, std::uint64_t seed) {
  if (max_particles < 2 || max_particles > kBruteForceCap) {
    throw PreconditionError("oracle-check needs 2 <= n <= " + std::to_string(kBruteForceCap));
  }
  const auto start = std::chrono::steady_clock::now();
  OracleReport report;
  report.trials = trials;
  report.max_particles = max_particles;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(seed, trial);
    const std::size_t n = 2 + static_cast<std::size_t>(rng() % (max_particles - 1));
    const InteractionGraph g = random_graph(n, rng.uniform(), rng);

    const std::size_t cap = std::min<std::size_t>(n - 1, kDefaultSubsystemCap);
    const std::size_t size = 1 + static_cast<std::size_t>(rng() % cap);
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    for (std::size_t k = 0; k < size; ++k) {
      std::swap(order[k], order[k + static_cast<std::size_t>(rng() % (n - k))]);
    }
    order.resize(size);
    const Partition p(order, n);

    const DensityMatrix fast = reduced_density_matrix(g, p, true);
    const DensityMatrix slow = brute_force_reduced(g, p);
    const double dev = (fast.matrix() - slow.matrix()).cwiseAbs().maxCoeff();
    report.max_deviation = std::max(report.max_deviation, dev);
    if (!(dev <= kOracleTolerance)) ++report.rdm_failures;

    // rank ρ_A > 1 ⇔ tr ρ_A² < 1 for a unit-trace PSD matrix
    const bool mixed = slow.purity() < 1.0 - 1e-9;
    if (is_entangled_partition(g, p) != mixed) ++report.criterion_failures;
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace spingas
