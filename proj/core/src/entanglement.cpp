#include "spingas/entanglement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "spingas/errors.hpp"

namespace spingas {

namespace {

void check_spectrum(const Eigen::VectorXd& eigenvalues) {
  const double lowest = eigenvalues.minCoeff();
  if (lowest < -kEigenvalueFloor) {
    throw InvalidStateError("density matrix is not positive semidefinite (eigenvalue " +
                            std::to_string(lowest) + ")");
  }
}

void check_two_qubit(const DensityMatrix& rho, const char* what) {
  if (rho.dim() != 4) {
    throw PreconditionError(std::string(what) + ": expected a two-qubit state, got dimension " +
                            std::to_string(rho.dim()));
  }
}

Eigen::Matrix4cd hermitian_part(const DensityMatrix& rho) {
  const Eigen::Matrix4cd m = rho.matrix();
  return 0.5 * (m + m.adjoint());
}

}  // namespace

double von_neumann_entropy_of_spectrum(const Eigen::VectorXd& eigenvalues) {
  check_spectrum(eigenvalues);
  double s = 0.0;
  for (double lambda : eigenvalues) {
    if (lambda > 0.0) s -= lambda * std::log2(lambda);
  }
  return std::max(0.0, s);
}

double von_neumann_entropy(const DensityMatrix& rho) {
  return von_neumann_entropy_of_spectrum(rho.spectrum());
}

double renyi_entropy_of_spectrum(const Eigen::VectorXd& eigenvalues, double q) {
  if (!(q > 0.0) || q == 1.0 || !std::isfinite(q)) {
    throw PreconditionError("renyi_entropy: order q must be positive, finite and not 1");
  }
  check_spectrum(eigenvalues);
  double trace = 0.0;
  for (double lambda : eigenvalues) {
    if (lambda > 0.0) trace += std::pow(lambda, q);
  }
  return std::max(0.0, std::log2(trace) / (1.0 - q));
}

double renyi_entropy(const DensityMatrix& rho, double q) {
  return renyi_entropy_of_spectrum(rho.spectrum(), q);
}

double meyer_wallach(const InteractionGraph& g) {
  const std::size_t n = g.size();
  if (n == 0) return 0.0;
  double purity_sum = 0.0;
  const int z[] = {1};
  for (std::size_t k = 0; k < n; ++k) {
    const CouplingBlock block(g, Partition::single(k, n));
    const double c = block.coherence(z).magnitude();
    purity_sum += 0.5 * (1.0 + c * c);
  }
  return std::clamp(2.0 * (1.0 - purity_sum / static_cast<double>(n)), 0.0, 1.0);
}

Eigen::Vector4d wootters_spectrum(const DensityMatrix& rho) {
  check_two_qubit(rho, "wootters_spectrum");
  const Eigen::Matrix4cd r = hermitian_part(rho);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> eig(r);
  check_spectrum(eig.eigenvalues());
  const Eigen::Vector4d roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::Matrix4cd sqrt_rho =
      eig.eigenvectors() * roots.cast<cplx>().asDiagonal() * eig.eigenvectors().adjoint();

  // σ_y ⊗ σ_y is real: antidiagonal (-1, 1, 1, -1).
  Eigen::Matrix4cd yy = Eigen::Matrix4cd::Zero();
  yy(0, 3) = -1.0;
  yy(1, 2) = 1.0;
  yy(2, 1) = 1.0;
  yy(3, 0) = -1.0;
  const Eigen::Matrix4cd flipped = yy * r.conjugate() * yy;
  Eigen::Matrix4cd m = sqrt_rho * flipped * sqrt_rho;
  m = 0.5 * (m + m.adjoint()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> eig_m(m, Eigen::EigenvaluesOnly);
  Eigen::Vector4d lambda = eig_m.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  std::sort(lambda.data(), lambda.data() + 4, std::greater<>());
  return lambda;
}

double concurrence(const DensityMatrix& rho) {
  const Eigen::Vector4d l = wootters_spectrum(rho);
  return std::clamp(l[0] - l[1] - l[2] - l[3], 0.0, 1.0);
}

LocalizableBounds localizable_bounds(const DensityMatrix& rho) {
  check_two_qubit(rho, "localizable_bounds");
  const Eigen::Matrix4cd r = hermitian_part(rho);

  Eigen::Matrix2cd pauli[3];
  pauli[0] << 0.0, 1.0, 1.0, 0.0;
  pauli[1] << 0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0;
  pauli[2] << 1.0, 0.0, 0.0, -1.0;
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();

  auto kron = [](const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    Eigen::Matrix4cd out;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    }
    return out;
  };
  auto expect = [&r](const Eigen::Matrix4cd& op) { return (r * op).trace().real(); };

  double single_a[3];
  double single_b[3];
  for (int a = 0; a < 3; ++a) {
    single_a[a] = expect(kron(pauli[a], id));
    single_b[a] = expect(kron(id, pauli[a]));
  }
  LocalizableBounds out;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const double corr = expect(kron(pauli[a], pauli[b])) - single_a[a] * single_b[b];
      out.lower = std::max(out.lower, std::abs(corr));
    }
  }
  out.upper = wootters_spectrum(rho).sum();
  return out;
}

EntanglementReport entanglement_report(const InteractionGraph& g, const Partition& p,
                                       std::size_t cap) {
  const BlockEntropy s = block_entropy(g, p, cap);
  return EntanglementReport{s.von_neumann, s.renyi2, p, is_entangled_partition(g, p)};
}

BlockEntropy block_entropy(const InteractionGraph& g, const Partition& p, std::size_t cap) {
  if (p.n_particles() != g.size()) {
    throw PreconditionError("block_entropy: partition built for a different N");
  }
  const CouplingBlock full(g, p);
  const std::size_t n = full.block_size();

  // Union members that share a partner with an effective coupling. Members
  // whose every coupling is a multiple of 2π stay pure and drop out.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<char> active(n, 0);
  for (std::size_t r = 0; r < full.partner_count(); ++r) {
    std::size_t first = n;
    for (std::size_t m = 0; m < n; ++m) {
      if (!is_effective_phase(full.coupling(r, m))) continue;
      active[m] = 1;
      if (first == n) {
        first = m;
      } else {
        parent[find(m)] = find(first);
      }
    }
  }

  std::vector<std::vector<std::size_t>> groups(n);
  for (std::size_t m = 0; m < n; ++m) {
    if (active[m]) groups[find(m)].push_back(full.members()[m]);
  }

  BlockEntropy out;
  for (const auto& group : groups) {
    if (group.empty()) continue;
    out.active_members += group.size();
    out.largest_factor = std::max(out.largest_factor, group.size());
    if (group.size() > cap) {
      throw CapacityError("block_entropy: entangled factor of " + std::to_string(group.size()) +
                          " qubits exceeds cap of " + std::to_string(cap));
    }
    const DensityMatrix rho = coherence_matrix(CouplingBlock(g, group, p));
    const Eigen::VectorXd spectrum = rho.spectrum();
    out.von_neumann += von_neumann_entropy_of_spectrum(spectrum);
    out.renyi2 += renyi_entropy_of_spectrum(spectrum, 2.0);
  }
  return out;
}

}  // namespace spingas
