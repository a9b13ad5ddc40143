#include <cmath>
#include <string>
#include <unordered_set>

#include "spingas/errors.hpp"
#include "spingas/quantum_state.hpp"

namespace spingas {

double pure_pair_concurrence(const Eigen::Matrix2cd& amplitudes) {
  const double norm2 = amplitudes.squaredNorm();
  if (norm2 == 0.0) return 0.0;
  return 2.0 * std::abs(amplitudes.determinant()) / norm2;
}

namespace {

// Amplitude matrix of two qubits coupled by an Ising phase: T(a, b) = e^{iφab}.
Eigen::Matrix2cd ising_link(double phase) {
  Eigen::Matrix2cd t;
  t << 1.0, 1.0, 1.0, std::polar(1.0, phase);
  return t;
}

void fast_walsh_hadamard(std::vector<cplx>& values) {
  const std::size_t n = values.size();
  for (std::size_t half = 1; half < n; half <<= 1) {
    for (std::size_t block = 0; block < n; block += 2 * half) {
      for (std::size_t k = block; k < block + half; ++k) {
        const cplx a = values[k];
        const cplx b = values[k + half];
        values[k] = a + b;
        values[k + half] = a - b;
      }
    }
  }
}

// Exact average over all 2^m x-measurement outcomes on the path
// intermediates. For fixed endpoint bits (a, b) the post-measurement
// amplitude for outcome vector o is Σ_s (-1)^{o·s} e^{i q(a, s, b)}, i.e. a
// Walsh-Hadamard transform of the phase function over intermediate bits.
double exact_path_concurrence(const std::vector<std::vector<double>>& phases) {
  const std::size_t length = phases.size();
  const std::size_t m = length - 2;
  const std::size_t branches = std::size_t{1} << m;
  const std::size_t last = length - 1;

  // q_mid[s]: phase from couplings among intermediates (bit t of s ↔ node t+1).
  std::vector<double> q_mid(branches, 0.0);
  for (std::size_t s = 1; s < branches; ++s) {
    std::size_t low = 0;
    while (((s >> low) & 1u) == 0) ++low;
    const std::size_t rest = s & (s - 1);
    double add = 0.0;
    for (std::size_t r = rest; r != 0; r &= r - 1) {
      std::size_t b = 0;
      while (((r >> b) & 1u) == 0) ++b;
      add += phases[low + 1][b + 1];
    }
    q_mid[s] = q_mid[rest] + add;
  }

  std::vector<std::vector<cplx>> amplitude(4, std::vector<cplx>(branches));
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      auto& f = amplitude[2 * a + b];
      for (std::size_t s = 0; s < branches; ++s) {
        double q = q_mid[s] + (a && b ? phases[0][last] : 0.0);
        for (std::size_t t = 0; t < m; ++t) {
          if ((s >> t) & 1u) q += a * phases[0][t + 1] + b * phases[t + 1][last];
        }
        f[s] = std::polar(1.0, q);
      }
      fast_walsh_hadamard(f);
    }
  }
  double total = 0.0;
  for (std::size_t o = 0; o < branches; ++o) {
    const cplx det = amplitude[0][o] * amplitude[3][o] - amplitude[1][o] * amplitude[2][o];
    total += 2.0 * std::abs(det);
  }
  return total / (4.0 * static_cast<double>(branches) * static_cast<double>(branches));
}

}  // namespace

Localization localize_entanglement(const InteractionGraph& g, std::size_t i, std::size_t j,
                                   std::size_t samples, Rng& rng) {
  if (i == j) throw PreconditionError("localize_entanglement: endpoints must differ");
  if (!path_exists(g, i, j)) {
    Localization out;
    out.disconnected = true;
    return out;
  }
  const std::vector<std::size_t> path = shortest_path(g, i, j);
  return localize_entanglement_along(g, path, samples, rng);
}

Localization localize_entanglement_along(const InteractionGraph& g,
                                         std::span<const std::size_t> path,
                                         std::size_t samples, Rng& rng) {
  if (path.size() < 2) {
    throw PreconditionError("localize_entanglement: path needs at least two particles");
  }
  std::unordered_set<std::size_t> seen;
  for (std::size_t k : path) {
    if (k >= g.size() || !seen.insert(k).second) {
      throw PreconditionError("localize_entanglement: path has invalid or repeated particles");
    }
  }
  for (std::size_t t = 0; t + 1 < path.size(); ++t) {
    if (!g.has_edge(path[t], path[t + 1])) {
      throw PreconditionError("localize_entanglement: no effective edge between " +
                              std::to_string(path[t]) + " and " + std::to_string(path[t + 1]));
    }
  }

  Localization out;
  out.path.assign(path.begin(), path.end());
  const std::size_t length = path.size();

  // Only the subgraph induced on the path enters; off-path particles are
  // decoupled by z-measurements.
  std::vector<std::vector<double>> phases(length, std::vector<double>(length, 0.0));
  bool chordless = true;
  for (std::size_t a = 0; a < length; ++a) {
    for (std::size_t b = a + 1; b < length; ++b) {
      const double phi = g.phase(path[a], path[b]);
      phases[a][b] = phases[b][a] = phi;
      if (b > a + 1 && is_effective_phase(phi)) chordless = false;
    }
  }

  if (length - 1 <= kExactLocalizationPathLength) {
    out.exact = true;
    out.branches = std::size_t{1} << (length - 2);
    out.concurrence = exact_path_concurrence(phases);
    return out;
  }

  if (!chordless) {
    throw PreconditionError(
        "localize_entanglement: sampled evaluation needs a chordless path");
  }
  if (samples == 0) {
    throw PreconditionError("localize_entanglement: path too long for exact enumeration and "
                            "no samples requested");
  }
  // Sequential sampling: the outcome probabilities of the first l
  // measurements only involve the transfer product up to link l+1.
  out.exact = false;
  out.branches = samples;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t sample = 0; sample < samples; ++sample) {
    Eigen::Matrix2cd r = ising_link(phases[0][1]);
    for (std::size_t t = 1; t + 1 < length; ++t) {
      const Eigen::Matrix2cd link = ising_link(phases[t][t + 1]);
      Eigen::Matrix2cd plus = r * link;
      Eigen::Matrix2cd minus = r;
      minus.col(1) *= -1.0;
      minus = minus * link;
      const double wp = plus.squaredNorm();
      const double wm = minus.squaredNorm();
      r = (rng.uniform() * (wp + wm) < wp) ? plus : minus;
      r /= std::sqrt(r.squaredNorm());
    }
    const double c = pure_pair_concurrence(r);
    sum += c;
    sum_sq += c * c;
  }
  const double n = static_cast<double>(samples);
  out.concurrence = sum / n;
  if (samples > 1) {
    const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
    out.standard_error = std::sqrt(var / n);
  }
  return out;
}

}  // namespace spingas
