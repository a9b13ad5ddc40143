#include "spingas/quantum_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <unordered_map>

#include "spingas/errors.hpp"

namespace spingas {

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix::DensityMatrix(Eigen::MatrixXcd matrix, std::vector<std::size_t> subset)
    : matrix_(std::move(matrix)), subset_(std::move(subset)) {
  if (matrix_.rows() != matrix_.cols()) {
    throw PreconditionError("density matrix: not square");
  }
  const auto d = static_cast<std::size_t>(matrix_.rows());
  if (d == 0 || (d & (d - 1)) != 0) {
    throw PreconditionError("density matrix: dimension " + std::to_string(d) +
                            " is not a power of two");
  }
}

DensityMatrix DensityMatrix::from_pure(const Eigen::VectorXcd& psi) {
  const double norm2 = psi.squaredNorm();
  return DensityMatrix((psi * psi.adjoint()) / norm2);
}

std::size_t DensityMatrix::n_qubits() const noexcept {
  std::size_t n = 0;
  for (std::size_t d = dim(); d > 1; d >>= 1) ++n;
  return n;
}

Eigen::VectorXd DensityMatrix::spectrum() const {
  const Eigen::MatrixXcd hermitian = 0.5 * (matrix_ + matrix_.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(hermitian, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

double DensityMatrix::purity() const {
  // tr ρ² = Σ |ρ_ij|² for Hermitian ρ.
  return matrix_.cwiseAbs2().sum();
}

double DensityMatrix::hermiticity_error() const {
  return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Coherence factors

double CoherenceFactor::magnitude() const { return std::exp(log_magnitude); }

cplx CoherenceFactor::value() const { return std::polar(magnitude(), phase); }

std::size_t ternary_size(std::size_t n) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < n; ++i) out *= 3;
  return out;
}

std::size_t ternary_index(std::span<const int> z) {
  std::size_t index = 0;
  for (int v : z) {
    if (v < -1 || v > 1) throw PreconditionError("coherence vector entries must be -1, 0 or 1");
    index = index * 3 + (v == 0 ? 0 : (v == 1 ? 1 : 2));
  }
  return index;
}

std::vector<int> ternary_vector(std::size_t index, std::size_t n) {
  std::vector<int> z(n, 0);
  for (std::size_t pos = n; pos-- > 0;) {
    const std::size_t digit = index % 3;
    index /= 3;
    z[pos] = digit == 0 ? 0 : (digit == 1 ? 1 : -1);
  }
  return z;
}

namespace {

// Accumulates e^{ix} cos x over partners. x is shifted by multiples of π
// (which leaves e^{ix} cos x unchanged) so that cos x ≥ 0 and the phase sum
// stays small.
struct FactorAccumulator {
  double log_magnitude = 0.0;
  double phase = 0.0;

  void multiply(double x) {
    if (x == 0.0) return;
    x -= std::numbers::pi * std::nearbyint(x / std::numbers::pi);
    const double c = std::cos(x);
    if (c <= 0.0) {
      log_magnitude = -std::numeric_limits<double>::infinity();
    } else {
      log_magnitude += std::log(c);
    }
    phase += x;
  }

  CoherenceFactor result() const {
    return {log_magnitude, std::remainder(phase, kTwoPi)};
  }
};

}  // namespace

CouplingBlock::CouplingBlock(const InteractionGraph& g, const Partition& p)
    : members_(p.members().begin(), p.members().end()) {
  if (p.n_particles() != g.size()) {
    throw PreconditionError("coupling block: partition built for a different N");
  }
  build(g, p);
}

CouplingBlock::CouplingBlock(const InteractionGraph& g, std::span<const std::size_t> members,
                             const Partition& outer)
    : members_(members.begin(), members.end()) {
  if (outer.n_particles() != g.size()) {
    throw PreconditionError("coupling block: partition built for a different N");
  }
  for (std::size_t k : members_) {
    if (!outer.contains(k)) {
      throw PreconditionError("coupling block: member outside the enclosing subset");
    }
  }
  build(g, outer);
}

void CouplingBlock::build(const InteractionGraph& g, const Partition& outer) {
  std::unordered_map<std::size_t, std::size_t> row_of;
  for (std::size_t k : members_) {
    for (const Neighbor& n : g.neighbors(k)) {
      if (!outer.contains(n.index) && n.phase != 0.0) {
        row_of.emplace(n.index, 0);
      }
    }
  }
  partners_.reserve(row_of.size());
  for (const auto& entry : row_of) partners_.push_back(entry.first);
  std::sort(partners_.begin(), partners_.end());
  for (std::size_t r = 0; r < partners_.size(); ++r) row_of[partners_[r]] = r;

  const std::size_t n = members_.size();
  phases_.assign(partners_.size() * n, 0.0);
  for (std::size_t m = 0; m < n; ++m) {
    for (const Neighbor& nb : g.neighbors(members_[m])) {
      auto it = row_of.find(nb.index);
      if (it != row_of.end() && !outer.contains(nb.index)) {
        phases_[it->second * n + m] = nb.phase;
      }
    }
  }
}

CoherenceFactor CouplingBlock::coherence(std::span<const int> z) const {
  const std::size_t n = members_.size();
  if (z.size() != n) {
    throw PreconditionError("coherence_factor: z has length " + std::to_string(z.size()) +
                            ", subsystem has " + std::to_string(n));
  }
  FactorAccumulator acc;
  for (std::size_t r = 0; r < partners_.size(); ++r) {
    double dot = 0.0;
    const double* row = &phases_[r * n];
    for (std::size_t m = 0; m < n; ++m) {
      if (z[m] != 0) dot += z[m] * row[m];
    }
    acc.multiply(0.5 * dot);
  }
  return acc.result();
}

std::vector<cplx> CouplingBlock::all_coherences() const {
  const std::size_t n = members_.size();
  const std::size_t rows = partners_.size();
  std::vector<cplx> out(ternary_size(n));
  // Depth-first over digits; dots[depth] holds z·Γ_k for the prefix.
  std::vector<std::vector<double>> dots(n + 1, std::vector<double>(rows, 0.0));
  std::vector<std::size_t> digit(n + 1, 0);
  std::vector<std::size_t> prefix(n + 1, 0);

  auto leaf = [&](std::size_t index) {
    FactorAccumulator acc;
    for (double d : dots[n]) acc.multiply(0.5 * d);
    out[index] = acc.result().value();
  };

  if (n == 0) {
    out[0] = 1.0;
    return out;
  }
  std::size_t depth = 0;
  digit[0] = 0;
  while (true) {
    if (digit[depth] > 2) {
      if (depth == 0) break;
      --depth;
      ++digit[depth];
      continue;
    }
    const int zval = digit[depth] == 0 ? 0 : (digit[depth] == 1 ? 1 : -1);
    for (std::size_t r = 0; r < rows; ++r) {
      dots[depth + 1][r] = dots[depth][r] + zval * phases_[r * n + depth];
    }
    prefix[depth + 1] = prefix[depth] * 3 + digit[depth];
    if (depth + 1 == n) {
      leaf(prefix[n]);
      ++digit[depth];
    } else {
      ++depth;
      digit[depth] = 0;
    }
  }
  return out;
}

CoherenceFactor coherence_factor(const InteractionGraph& g, const Partition& p,
                                 std::span<const int> z) {
  if (z.size() != p.size()) {
    throw PreconditionError("coherence_factor: z has length " + std::to_string(z.size()) +
                            ", subsystem has " + std::to_string(p.size()));
  }
  return CouplingBlock(g, p).coherence(z);
}

// ---------------------------------------------------------------------------
// Reduced density matrices

namespace {

// T[s] = Σ_j bit_j(s) 3^{n-1-j}. The ternary index of z = s - s' is
// T[s] + 2 T[s'] - 3 T[s & s'].
std::vector<std::size_t> ternary_weights(std::size_t n) {
  const std::size_t dim = std::size_t{1} << n;
  std::vector<std::size_t> t(dim, 0);
  for (std::size_t s = 0; s < dim; ++s) {
    std::size_t acc = 0;
    for (std::size_t j = 0; j < n; ++j) acc = acc * 3 + static_cast<std::size_t>(basis_bit(s, j, n));
    t[s] = acc;
  }
  return t;
}

void check_cap(std::size_t n, std::size_t cap, const char* what) {
  if (n > cap) {
    throw CapacityError(std::string(what) + ": subsystem of " + std::to_string(n) +
                        " qubits exceeds cap of " + std::to_string(cap));
  }
}

}  // namespace

DensityMatrix coherence_matrix(const CouplingBlock& block) {
  const std::size_t n = block.block_size();
  check_cap(n, 24, "coherence_matrix");
  const std::size_t dim = std::size_t{1} << n;
  const std::vector<cplx> coherences = block.all_coherences();
  const std::vector<std::size_t> t = ternary_weights(n);
  const double scale = 1.0 / static_cast<double>(dim);
  Eigen::MatrixXcd rho(dim, dim);
  for (std::size_t s = 0; s < dim; ++s) {
    for (std::size_t sp = 0; sp < dim; ++sp) {
      rho(s, sp) = scale * coherences[t[s] + 2 * t[sp] - 3 * t[s & sp]];
    }
  }
  return DensityMatrix(std::move(rho), {block.members().begin(), block.members().end()});
}

DensityMatrix reduced_density_matrix(const InteractionGraph& g, const Partition& p,
                                     bool include_internal, std::size_t cap) {
  check_cap(p.size(), cap, "reduced_density_matrix");
  DensityMatrix rho = coherence_matrix(CouplingBlock(g, p));
  if (!include_internal) return rho;

  const std::size_t n = p.size();
  const std::size_t dim = std::size_t{1} << n;
  const auto members = p.members();
  std::vector<double> internal(dim, 0.0);
  for (std::size_t s = 0; s < dim; ++s) {
    double q = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      if (!basis_bit(s, a, n)) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        if (basis_bit(s, b, n)) q += g.phase(members[a], members[b]);
      }
    }
    internal[s] = q;
  }
  for (std::size_t s = 0; s < dim; ++s) {
    for (std::size_t sp = 0; sp < dim; ++sp) {
      rho.matrix()(s, sp) *= std::polar(1.0, internal[s] - internal[sp]);
    }
  }
  return rho;
}

double subsystem_purity(const InteractionGraph& g, const Partition& p, std::size_t cap) {
  // Members without partners in B stay in |+⟩ and factor out of the purity.
  const CouplingBlock full(g, p);
  std::vector<char> active(full.block_size(), 0);
  for (std::size_t r = 0; r < full.partner_count(); ++r) {
    for (std::size_t m = 0; m < full.block_size(); ++m) {
      if (full.coupling(r, m) != 0.0) active[m] = 1;
    }
  }
  std::vector<std::size_t> members;
  for (std::size_t m = 0; m < full.block_size(); ++m) {
    if (active[m]) members.push_back(full.members()[m]);
  }
  if (members.empty()) return 1.0;
  check_cap(members.size(), cap, "subsystem_purity");

  const CouplingBlock block(g, members, p);
  const std::size_t n = block.block_size();
  const std::vector<cplx> coherences = block.all_coherences();
  // tr ρ̃² = 4^{-n} Σ_z 2^{n - |z|} |C(z)|²
  double sum = 0.0;
  for (std::size_t index = 0; index < coherences.size(); ++index) {
    std::size_t nonzero = 0;
    for (std::size_t rest = index; rest > 0; rest /= 3) nonzero += (rest % 3) != 0;
    sum += std::ldexp(std::norm(coherences[index]), static_cast<int>(n - nonzero));
  }
  return std::ldexp(sum, -2 * static_cast<int>(n));
}

// ---------------------------------------------------------------------------
// Brute force

Eigen::VectorXcd brute_force_state(const InteractionGraph& g) {
  const std::size_t n = g.size();
  if (n > kBruteForceCap) {
    throw CapacityError("brute_force_state: N = " + std::to_string(n) + " exceeds cap of " +
                        std::to_string(kBruteForceCap));
  }
  const std::size_t dim = std::size_t{1} << n;
  // q(s) = Σ_{k<l} Γ_kl s_k s_l, built incrementally from s with its lowest
  // set bit cleared.
  std::vector<std::vector<double>> gamma(n, std::vector<double>(n, 0.0));
  g.for_each_pair([&](std::size_t k, std::size_t l, double phase) {
    gamma[k][l] = phase;
    gamma[l][k] = phase;
  });
  std::vector<double> q(dim, 0.0);
  for (std::size_t s = 1; s < dim; ++s) {
    const std::size_t low = s & (~s + 1);
    const std::size_t rest = s ^ low;
    std::size_t bit_pos = 0;
    while ((std::size_t{1} << bit_pos) != low) ++bit_pos;
    const std::size_t k = n - 1 - bit_pos;  // particle k is bit n-1-k
    double add = 0.0;
    for (std::size_t r = rest; r != 0; r &= r - 1) {
      std::size_t b = 0;
      while (((r >> b) & 1u) == 0) ++b;
      add += gamma[k][n - 1 - b];
    }
    q[s] = q[rest] + add;
  }
  const double amplitude = 1.0 / std::sqrt(static_cast<double>(dim));
  Eigen::VectorXcd psi(dim);
  for (std::size_t s = 0; s < dim; ++s) psi[s] = std::polar(amplitude, q[s]);
  return psi;
}

DensityMatrix partial_trace(const Eigen::VectorXcd& psi, std::size_t n_qubits,
                            std::span<const std::size_t> keep) {
  const std::size_t dim = std::size_t{1} << n_qubits;
  if (static_cast<std::size_t>(psi.size()) != dim) {
    throw PreconditionError("partial_trace: state has wrong length");
  }
  std::vector<char> kept(n_qubits, 0);
  for (std::size_t q : keep) {
    if (q >= n_qubits || kept[q]) throw PreconditionError("partial_trace: bad qubit list");
    kept[q] = 1;
  }
  const std::size_t na = keep.size();
  const std::size_t nb = n_qubits - na;
  Eigen::MatrixXcd block(std::size_t{1} << na, std::size_t{1} << nb);
  for (std::size_t s = 0; s < dim; ++s) {
    std::size_t a = 0;
    std::size_t b = 0;
    for (std::size_t q = 0; q < n_qubits; ++q) {
      const std::size_t bit = static_cast<std::size_t>(basis_bit(s, q, n_qubits));
      if (kept[q]) {
        a = (a << 1) | bit;
      } else {
        b = (b << 1) | bit;
      }
    }
    block(a, b) = psi[s];
  }
  Eigen::MatrixXcd rho = block * block.adjoint();
  return DensityMatrix(std::move(rho), {keep.begin(), keep.end()});
}

DensityMatrix brute_force_reduced(const InteractionGraph& g, const Partition& p) {
  return partial_trace(brute_force_state(g), g.size(), p.members());
}

}  // namespace spingas
