#pragma once

#include <string>

#include "spingas/interaction_graph.hpp"
#include "spingas/quantum_state.hpp"

namespace spingas {

/// Graph snapshot:
///   {"schema": "spingas.graph.v1", "n_particles": N,
///    "edges": [[k, l, phase], ...]}   (k < l, raw accumulated phases)
inline constexpr const char* kGraphSchema = "spingas.graph.v1";

std::string graph_to_json(const InteractionGraph& g);
/// Throws ConfigError with a field path on malformed input.
InteractionGraph graph_from_json(const std::string& text);

/// Density matrix:
///   {"schema": "spingas.density_matrix.v1", "dim": d, "subset": [...],
///    "entries": [[re, im], ...]}   (row-major, d² pairs)
inline constexpr const char* kDensityMatrixSchema = "spingas.density_matrix.v1";

std::string density_matrix_to_json(const DensityMatrix& rho);
DensityMatrix density_matrix_from_json(const std::string& text);

}  // namespace spingas
