#pragma once

#include <cstddef>
#include <numbers>
#include <string>

#include "spingas/interaction_graph.hpp"
#include "spingas/random.hpp"

namespace spingas {

/// 2 - log₂ e: mean single-collision entropy for a uniformly random phase.
inline constexpr double kRandomPhaseEntropy = 2.0 - std::numbers::log2e;

/// Largest expected number of collisions per particle in one substep.
inline constexpr double kMaxCollisionsPerSubstep = 0.1;

enum class PhaseMode {
  exact,          ///< φ = γ / v per collision
  random_uniform  ///< φ uniform on [0, 2π)
};

std::string to_string(PhaseMode mode);
PhaseMode phase_mode_from_string(const std::string& name);

/// Dilute hard-sphere gas in natural units (k_B = m = 1 by default). The
/// interaction range of the step coupling is the sphere diameter.
struct BoltzmannConfig {
  double density = 1.0;             ///< n
  double temperature = 1.0;         ///< T
  double mass = 1.0;                ///< m
  double diameter = 1.0;            ///< d
  double coupling = 1.0;            ///< γ
  std::size_t particles = 2;        ///< N
  double boltzmann_constant = 1.0;  ///< k_B
  PhaseMode phase_mode = PhaseMode::exact;

  /// σ = √(k_B T / m)
  double sigma() const;
  /// ⟨v_r⟩ = √(16 k_B T / (m π))
  double mean_relative_speed() const;
  /// r = π d² n ⟨v_r⟩, collisions per particle per unit time
  double collision_rate() const;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// Relative speed of a colliding pair: density ∝ v³ exp(-v²/(4σ²)), i.e.
/// the Maxwell relative-speed law weighted by the collision flux v. Drawn
/// as v = 2σ√u with u ~ Gamma(2, 1), floored at 10⁻⁶ σ.
double sample_relative_speed(double sigma, Rng& rng);

/// Phase deposited by one collision under the configured mode.
double sample_collision_phase(const BoltzmannConfig& cfg, Rng& rng);

/// Evolves the gas for a time dt. The interval is split into substeps with
/// r·dt ≤ kMaxCollisionsPerSubstep; in each, every unordered pair collides
/// with probability r·dt/(N-1). Returns the number of collisions.
std::size_t sample_collisions(const BoltzmannConfig& cfg, InteractionGraph& g, double dt,
                              Rng& rng);

struct AnalyticValue {
  double value = 0.0;
  bool in_regime = true;
};

/// ⟨S_A⟩ ≈ N_A N_B/(N-1) · rt · (2 - log₂ e), valid for rt < 1.
AnalyticValue analytic_short_time_entropy(std::size_t n, std::size_t n_a, double rt);
AnalyticValue analytic_short_time_entropy(const BoltzmannConfig& cfg, std::size_t n_a,
                                          double t);

/// -log₂(2^{-N} Σ_Z C(N_A, Z) (1 + e^{-rtZ/(N-1)})^{N_B}), in log domain.
double analytic_entropy_lower_bound(std::size_t n, std::size_t n_a, double r, double t);

/// Short-time form -log₂(1 - N_A N_B rt / (4(N-1))); +inf once the argument
/// of the logarithm is no longer positive.
AnalyticValue short_time_lower_bound(std::size_t n, std::size_t n_a, double rt);

/// Long-time form -log₂(2^{-N_A} + 2^{-N_B} - 2^{-N} + N_A N_B 2^{-N} e^{-rt/(N-1)}).
double long_time_lower_bound(std::size_t n, std::size_t n_a, double rt);

struct AlphaResult {
  double closed = 0.0;      ///< ¼ n √π d² γ² / σ
  double quadrature = 0.0;  ///< 4π² d² n (4πσ²)^{-3/2} ∫ v³ e^{-v²/4σ²} sin²(γ/2v) dv
  bool in_regime = true;    ///< γ/σ < 1
};

AlphaResult analytic_alpha(const BoltzmannConfig& cfg);

/// Initial slope α N_A N_B / (2 ln2 (N-1)) of the purity-based entropy
/// bound in the small-phase regime, using the quadrature α.
double small_phase_entropy_slope(const BoltzmannConfig& cfg, std::size_t n_a);

struct DecoherenceTimes {
  double tau_e = 0.0;  ///< 8 δt / δφ², exponential (fresh partners)
  double tau_g = 0.0;  ///< 2 δt / δφ, Gaussian (same partner)
};

/// Requires δφ ∈ (0, π) and δt > 0.
DecoherenceTimes decoherence_times(double delta_phi, double delta_t);

}  // namespace spingas
