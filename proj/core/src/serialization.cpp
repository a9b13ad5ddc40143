#include "spingas/serialization.hpp"

#include <json.hpp>

#include "spingas/errors.hpp"

namespace spingas {

using nlohmann::json;

namespace {

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
}

void expect_schema(const json& doc, const char* schema) {
  if (!doc.is_object() || !doc.contains("schema") || doc["schema"] != schema) {
    throw ConfigError("schema", std::string("expected \"") + schema + "\"");
  }
}

}  // namespace

std::string graph_to_json(const InteractionGraph& g) {
  json edges = json::array();
  g.for_each_pair([&](std::size_t k, std::size_t l, double phase) {
    edges.push_back(json::array({k, l, phase}));
  });
  const json doc = {{"schema", kGraphSchema}, {"n_particles", g.size()}, {"edges", edges}};
  return doc.dump();
}

InteractionGraph graph_from_json(const std::string& text) {
  const json doc = parse(text);
  expect_schema(doc, kGraphSchema);
  if (!doc.contains("n_particles") || !doc["n_particles"].is_number_unsigned()) {
    throw ConfigError("n_particles", "expected a non-negative integer");
  }
  InteractionGraph g(doc["n_particles"].get<std::size_t>());
  if (!doc.contains("edges") || !doc["edges"].is_array()) {
    throw ConfigError("edges", "expected an array");
  }
  const json& edges = doc["edges"];
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const json& e = edges[i];
    const std::string field = "edges[" + std::to_string(i) + "]";
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_unsigned() ||
        !e[1].is_number_unsigned() || !e[2].is_number()) {
      throw ConfigError(field, "expected [k, l, phase]");
    }
    try {
      g.add_phase(e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>());
    } catch (const PreconditionError& err) {
      throw ConfigError(field, err.what());
    }
  }
  return g;
}

std::string density_matrix_to_json(const DensityMatrix& rho) {
  json entries = json::array();
  for (std::size_t r = 0; r < rho.dim(); ++r) {
    for (std::size_t c = 0; c < rho.dim(); ++c) {
      entries.push_back(json::array({rho(r, c).real(), rho(r, c).imag()}));
    }
  }
  const json doc = {{"schema", kDensityMatrixSchema},
                    {"dim", rho.dim()},
                    {"subset", rho.subset()},
                    {"entries", entries}};
  return doc.dump();
}

DensityMatrix density_matrix_from_json(const std::string& text) {
  const json doc = parse(text);
  expect_schema(doc, kDensityMatrixSchema);
  if (!doc.contains("dim") || !doc["dim"].is_number_unsigned()) {
    throw ConfigError("dim", "expected a positive integer");
  }
  const auto dim = doc["dim"].get<std::size_t>();
  if (!doc.contains("entries") || !doc["entries"].is_array() ||
      doc["entries"].size() != dim * dim) {
    throw ConfigError("entries", "expected dim*dim [re, im] pairs");
  }
  Eigen::MatrixXcd m(dim, dim);
  const json& entries = doc["entries"];
  for (std::size_t i = 0; i < dim * dim; ++i) {
    const json& e = entries[i];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
      throw ConfigError("entries[" + std::to_string(i) + "]", "expected [re, im]");
    }
    m(i / dim, i % dim) = cplx(e[0].get<double>(), e[1].get<double>());
  }
  std::vector<std::size_t> subset;
  if (doc.contains("subset")) subset = doc["subset"].get<std::vector<std::size_t>>();
  try {
    return DensityMatrix(std::move(m), std::move(subset));
  } catch (const PreconditionError& err) {
    throw ConfigError("dim", err.what());
  }
}

}  // namespace spingas
