#pragma once

#include <cstddef>
#include <vector>

#include "oracles.hpp"
#include "spingas/interaction_graph.hpp"

namespace test_support {

inline oracle::Phases phases_of(const spingas::InteractionGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  oracle::Phases out = oracle::Phases::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = 0; l < n; ++l) {
      if (k != l) out(k, l) = g.phase(static_cast<std::size_t>(k), static_cast<std::size_t>(l));
    }
  }
  return out;
}

/// Members of the subset encoded by the bits of `mask`.
inline std::vector<std::size_t> subset_of(std::size_t mask, std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < n; ++k) {
    if (mask >> k & 1u) out.push_back(k);
  }
  return out;
}

}  // namespace test_support
