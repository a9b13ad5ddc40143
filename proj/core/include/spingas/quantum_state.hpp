#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spingas/interaction_graph.hpp"
#include "spingas/random.hpp"

namespace spingas {

using cplx = std::complex<double>;

/// Default cap on |A| for dense reduced density matrices (memory bound:
/// 4^12 complex entries).
inline constexpr std::size_t kDefaultSubsystemCap = 12;
/// Cap on N for the full 2^N state vector oracle.
inline constexpr std::size_t kBruteForceCap = 20;

/// Basis convention: the first qubit of a subsystem is the most significant
/// bit of the basis index (kron ordering).
inline int basis_bit(std::size_t index, std::size_t position, std::size_t n_qubits) {
  return static_cast<int>((index >> (n_qubits - 1 - position)) & 1u);
}

/// Dense density matrix of a qubit subsystem, tagged with the particle
/// indices it describes (may be empty for free-standing states).
class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(Eigen::MatrixXcd matrix, std::vector<std::size_t> subset = {});

  static DensityMatrix from_pure(const Eigen::VectorXcd& psi);

  const Eigen::MatrixXcd& matrix() const noexcept { return matrix_; }
  Eigen::MatrixXcd& matrix() noexcept { return matrix_; }
  const std::vector<std::size_t>& subset() const noexcept { return subset_; }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
  std::size_t n_qubits() const noexcept;

  cplx operator()(std::size_t r, std::size_t c) const { return matrix_(r, c); }

  /// Eigenvalues in ascending order (self-adjoint solver on the Hermitian part).
  Eigen::VectorXd spectrum() const;

  double trace() const { return matrix_.trace().real(); }
  double purity() const;
  double hermiticity_error() const;

 private:
  Eigen::MatrixXcd matrix_;
  std::vector<std::size_t> subset_;
};

/// The factor C_{s s'} multiplying one coherence of ρ̃_A. Stored as
/// log-magnitude plus phase so products of very many cosines neither
/// underflow to zero nor lose their phase.
struct CoherenceFactor {
  double log_magnitude = 0.0;  ///< -inf when an exact zero factor occurred
  double phase = 0.0;          ///< in (-π, π]

  double magnitude() const;
  cplx value() const;
};

/// Coherence-difference vectors z ∈ {-1,0,1}^n are indexed in base 3 with
/// digit 0 ↦ 0, 1 ↦ +1, 2 ↦ -1; the first entry is the most significant digit.
std::size_t ternary_index(std::span<const int> z);
std::vector<int> ternary_vector(std::size_t index, std::size_t n);
std::size_t ternary_size(std::size_t n);

/// Γ_AB restricted to the members of A and to partners k ∈ B that actually
/// couple to them. Coherence factors of A only depend on this block.
class CouplingBlock {
 public:
  /// Block for the full subset A of `p`.
  CouplingBlock(const InteractionGraph& g, const Partition& p);
  /// Block for `members` ⊆ A, with partners taken from outside `outer`.
  CouplingBlock(const InteractionGraph& g, std::span<const std::size_t> members,
                const Partition& outer);

  std::size_t block_size() const noexcept { return members_.size(); }
  std::size_t partner_count() const noexcept { return partners_.size(); }
  std::span<const std::size_t> members() const noexcept { return members_; }
  std::span<const std::size_t> partners() const noexcept { return partners_; }
  /// Γ_{partner, member}, partner-major.
  double coupling(std::size_t partner, std::size_t member) const {
    return phases_[partner * members_.size() + member];
  }

  /// ∏_{k∈B} e^{i z·Γ_k/2} cos(z·Γ_k/2).
  CoherenceFactor coherence(std::span<const int> z) const;

  /// Coherence values for every z, in ternary_index order.
  std::vector<cplx> all_coherences() const;

 private:
  void build(const InteractionGraph& g, const Partition& outer);

  std::vector<std::size_t> members_;
  std::vector<std::size_t> partners_;
  std::vector<double> phases_;
};

/// C_{s_A s'_A} for the coherence with difference z = s_A - s'_A.
CoherenceFactor coherence_factor(const InteractionGraph& g, const Partition& p,
                                 std::span<const int> z);

/// ρ̃_A from the Hadamard-product engine: entry (s, s') = 2^{-N_A} C(s - s').
DensityMatrix coherence_matrix(const CouplingBlock& block);

/// Reduced state of A. With include_internal the diagonal unitary generated
/// by Γ_AA is applied, giving the exact ρ_A; otherwise ρ̃_A.
DensityMatrix reduced_density_matrix(const InteractionGraph& g, const Partition& p,
                                     bool include_internal,
                                     std::size_t cap = kDefaultSubsystemCap);

/// tr ρ̃_A², from coherence factors only (no dense matrix).
double subsystem_purity(const InteractionGraph& g, const Partition& p,
                        std::size_t cap = kDefaultSubsystemCap);

/// U_t |+⟩^⊗N = 2^{-N/2} Σ_s exp(i s·Γ·s / 2) |s⟩, for N ≤ kBruteForceCap.
Eigen::VectorXcd brute_force_state(const InteractionGraph& g);

/// Partial trace of a state vector of `n_qubits` qubits onto `keep`
/// (sorted qubit positions).
DensityMatrix partial_trace(const Eigen::VectorXcd& psi, std::size_t n_qubits,
                            std::span<const std::size_t> keep);

/// Exact ρ_A from the full state vector. Validation only.
DensityMatrix brute_force_reduced(const InteractionGraph& g, const Partition& p);

// ---------------------------------------------------------------------------
// Entanglement localization

/// Paths with at most this many edges are evaluated by exact branch
/// enumeration; longer ones by sampling measurement branches.
inline constexpr std::size_t kExactLocalizationPathLength = 20;

struct Localization {
  double concurrence = 0.0;  ///< outcome-weighted mean concurrence of the pair
  double standard_error = 0.0;  ///< 0 for exact enumeration
  bool disconnected = false;
  bool exact = true;
  std::vector<std::size_t> path;
  std::size_t branches = 0;  ///< enumerated or sampled measurement branches
};

/// Localizes entanglement between i and j: z-measurements decouple every
/// particle off a shortest i–j path (their phase kicks are undone by local
/// unitaries), then the path intermediates are measured in the |±⟩ basis.
/// Returns the mean concurrence of the resulting pair state.
Localization localize_entanglement(const InteractionGraph& g, std::size_t i, std::size_t j,
                                   std::size_t samples, Rng& rng);

/// Same protocol along an explicit path (endpoints included; consecutive
/// entries must share an effective edge). Chords between path particles are
/// included in the exact evaluation; sampled evaluation requires a chordless
/// path.
Localization localize_entanglement_along(const InteractionGraph& g,
                                         std::span<const std::size_t> path,
                                         std::size_t samples, Rng& rng);

/// Concurrence of a two-qubit pure state given as its 2×2 amplitude matrix
/// (rows: first qubit). Need not be normalized.
double pure_pair_concurrence(const Eigen::Matrix2cd& amplitudes);

}  // namespace spingas
