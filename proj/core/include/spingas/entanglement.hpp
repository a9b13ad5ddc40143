#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "spingas/interaction_graph.hpp"
#include "spingas/quantum_state.hpp"

namespace spingas {

/// Eigenvalues in [-kEigenvalueFloor, 0] are treated as zero; anything more
/// negative marks the matrix as not positive semidefinite.
inline constexpr double kEigenvalueFloor = 1e-10;

/// S = -Σ λ log₂ λ, with 0 log 0 = 0. Throws InvalidStateError if ρ is not
/// PSD within kEigenvalueFloor.
double von_neumann_entropy(const DensityMatrix& rho);
double von_neumann_entropy_of_spectrum(const Eigen::VectorXd& eigenvalues);

/// S_q = log₂(tr ρ^q) / (1 - q), q > 0 and q ≠ 1.
double renyi_entropy(const DensityMatrix& rho, double q);
double renyi_entropy_of_spectrum(const Eigen::VectorXd& eigenvalues, double q);

/// Q = 2 (1 - N⁻¹ Σ_k tr ρ_k²). Single-particle purities come straight from
/// coherence factors: tr ρ_k² = (1 + |C_k|²) / 2.
double meyer_wallach(const InteractionGraph& g);

/// Square roots of the eigenvalues of √ρ ρ̃ √ρ with ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y),
/// in decreasing order.
Eigen::Vector4d wootters_spectrum(const DensityMatrix& rho);

/// Wootters concurrence max{0, λ₁ - λ₂ - λ₃ - λ₄}.
double concurrence(const DensityMatrix& rho);

struct LocalizableBounds {
  double lower = 0.0;  ///< best connected Pauli correlation |⟨σ_a σ_b⟩ - ⟨σ_a⟩⟨σ_b⟩|
  double upper = 0.0;  ///< concurrence of assistance Σ λᵢ
};

/// Lower bound optimizes over the nine Pauli pairs only.
LocalizableBounds localizable_bounds(const DensityMatrix& rho);

struct EntanglementReport {
  double von_neumann = 0.0;
  double renyi2 = 0.0;
  Partition partition;
  bool connected = false;
};

/// Entropies of ρ_A for the graph state, plus the graph criterion.
EntanglementReport entanglement_report(const InteractionGraph& g, const Partition& p,
                                       std::size_t cap = kDefaultSubsystemCap);

struct BlockEntropy {
  double von_neumann = 0.0;
  double renyi2 = 0.0;
  std::size_t active_members = 0;  ///< members of A with a partner in B
  std::size_t largest_factor = 0;  ///< qubits in the biggest tensor factor
};

/// Entropies of ρ̃_A without building the full 2^{N_A} matrix when it
/// factorizes. Members of A are grouped by shared partners in B; ρ̃_A is a
/// tensor product over the groups, so entropies add. The cap applies to
/// the largest group.
BlockEntropy block_entropy(const InteractionGraph& g, const Partition& p,
                           std::size_t cap = kDefaultSubsystemCap);

}  // namespace spingas
