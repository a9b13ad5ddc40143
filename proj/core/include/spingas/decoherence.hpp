#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spingas/ensemble.hpp"
#include "spingas/interaction_graph.hpp"
#include "spingas/lattice.hpp"
#include "spingas/quantum_state.hpp"
#include "spingas/random.hpp"

namespace spingas {

/// Dephasing channel on N_A probe qubits: |s⟩⟨s'| ↦ C(s - s') |s⟩⟨s'|.
/// Coefficients are stored for every z in ternary_index order, so
/// C(0) = 1 and C(-z) = conj C(z).
class ProbeChannel {
 public:
  ProbeChannel(std::size_t n_probes, std::vector<cplx> coefficients, double time = 0.0,
               std::size_t realization = 0);

  /// Channel the background in `g` applies to the particles of `probes`.
  static ProbeChannel from_graph(const InteractionGraph& g, const Partition& probes,
                                 double time = 0.0, std::size_t realization = 0);
  static ProbeChannel identity(std::size_t n_probes);
  static ProbeChannel fully_dephasing(std::size_t n_probes);

  std::size_t n_probes() const noexcept { return n_probes_; }
  cplx coefficient(std::span<const int> z) const { return coefficients_[ternary_index(z)]; }
  const std::vector<cplx>& coefficients() const noexcept { return coefficients_; }
  double time() const noexcept { return time_; }
  std::size_t realization() const noexcept { return realization_; }

  /// Largest violation of C(0) = 1, |C| ≤ 1 and C(-z) = conj C(z).
  double invariant_error() const;

 private:
  std::size_t n_probes_;
  std::vector<cplx> coefficients_;
  double time_;
  std::size_t realization_;
};

/// Output is checked to be PSD within 10⁻⁸ (InvalidStateError otherwise).
DensityMatrix apply_channel(const ProbeChannel& channel, const DensityMatrix& rho_in);

/// Coefficient-wise arithmetic mean.
ProbeChannel average_channel(std::span<const ProbeChannel> channels);

/// |ν e^{iδφ/2} cos(δφ/2) + (1 - ν)|^{2k}: |C_{00,11}| for two probes that
/// meet fresh gas particles with probability ν per step.
double markovian_analytic(double nu, double delta_phi, std::size_t k);

enum class ProbeState {
  psi_plus,  ///< (|01⟩ + |10⟩)/√2
  phi_plus,  ///< (|00⟩ + |11⟩)/√2
  cluster    ///< (|+0⟩ + |-1⟩)/√2
};

std::string to_string(ProbeState s);
ProbeState probe_state_from_string(const std::string& name);
DensityMatrix probe_state(ProbeState s);

/// C_G = max{0, ½(-1 + 2√C_Bell + C_Bell)}.
double cluster_from_bell_concurrence(double c_bell);

struct EpsilonStats {
  std::size_t samples = 0;
  bool exact = false;  ///< all 2^{N_B} partner configurations enumerated
  double mean = 0.0;   ///< ⟨ε⟩, the coherence phase Φ
  double sigma = 0.0;  ///< σ_Γ
  double histogram_low = 0.0;
  double histogram_high = 0.0;
  std::vector<double> histogram;  ///< probability per bin
};

/// Distribution of ε = z·Γ_AB·s_B over uniform s_B. Enumerated exactly when
/// at most kExactEpsilonPartners partners couple to A, sampled otherwise.
inline constexpr std::size_t kExactEpsilonPartners = 20;
EpsilonStats epsilon_distribution(const InteractionGraph& g, const Partition& p,
                                  std::span<const int> z, std::size_t n_samples, Rng& rng,
                                  std::size_t bins = 64);

struct RegimeFit {
  double exponent = 0.0;   ///< slope of log σ_Γ against log t
  std::size_t points = 0;  ///< grid points inside the window
  std::string regime;      ///< "markovian", "non_markovian" or "undetermined"
};

/// Least-squares exponent over points with σ_Γ in [low, high]. Exponents
/// below 0.75 are classed Markovian.
RegimeFit fit_regime_exponent(std::span<const double> times, std::span<const double> sigmas,
                              double low = 0.1, double high = 1.0);

struct ConcurrencePoint {
  double averaged_state = 0.0;  ///< concurrence of the ensemble-averaged output
  double averaged_state_error = 0.0;
  double mean_of_states = 0.0;  ///< mean concurrence of per-realization outputs
  double mean_of_states_error = 0.0;
};

/// Both averaging orders over an ensemble of channels for one input state.
ConcurrencePoint ensemble_concurrence(std::span<const ProbeChannel> channels,
                                      const DensityMatrix& input);

/// |C̄(z)| of the averaged channel with its jackknife standard error.
JackknifeResult averaged_coherence(std::span<const ProbeChannel> channels,
                                   std::span<const int> z);

struct ProbeChannelSeries {
  std::vector<double> times;
  /// channels[row][realization]
  std::vector<std::vector<ProbeChannel>> channels;
};

/// Channels of the first two probes at every grid time.
ProbeChannelSeries probe_channel_timeseries(const LatticeConfig& cfg,
                                            const std::vector<double>& times,
                                            const EnsembleOptions& options);

struct DistanceRow {
  ProbeState state;
  int distance = 0;
  ConcurrencePoint concurrence;
};

/// Probe pairs separated by each distance along the drag axis, all riding
/// through the same realization: a reference probe at the origin and one
/// probe `d` sites behind it per requested distance. The probe layout in
/// `cfg` is replaced.
std::vector<DistanceRow> concurrence_vs_distance(const LatticeConfig& cfg,
                                                 std::span<const ProbeState> states, double t_o,
                                                 std::span<const int> distances,
                                                 const EnsembleOptions& options);

}  // namespace spingas
