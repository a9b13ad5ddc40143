#include <doctest.h>

#include <algorithm>
#include <numbers>
#include <vector>

#include "spingas/errors.hpp"
#include "spingas/interaction_graph.hpp"
#include "spingas/oracle.hpp"
#include "spingas/quantum_state.hpp"
#include "spingas/serialization.hpp"
#include "support.hpp"

using namespace spingas;
using std::numbers::pi;

TEST_SUITE("graph_core") {

TEST_CASE("add_phase accumulates symmetrically without reduction") {
  InteractionGraph g(3);
  g.add_phase(0, 1, pi);
  CHECK(g.phase(0, 1) == pi);
  CHECK(g.phase(1, 0) == pi);
  g.add_phase(1, 0, pi);
  CHECK(g.phase(0, 1) == doctest::Approx(2 * pi));
  CHECK(g.phase(2, 2) == 0.0);
  CHECK_THROWS_AS(g.add_phase(0, 0, 1.0), PreconditionError);
  CHECK_THROWS_AS(g.add_phase(0, 3, 1.0), PreconditionError);
}

TEST_CASE("random add_phase sequences keep symmetry and zero diagonal") {
  Rng rng(11, 0);
  InteractionGraph g(9);
  std::vector<std::vector<double>> ref(9, std::vector<double>(9, 0.0));
  for (int step = 0; step < 500; ++step) {
    const auto k = static_cast<std::size_t>(rng() % 9);
    auto l = static_cast<std::size_t>(rng() % 8);
    if (l >= k) ++l;
    const double delta = 4.0 * rng.uniform() - 1.0;
    g.add_phase(k, l, delta);
    ref[k][l] += delta;
    ref[l][k] += delta;
  }
  for (std::size_t k = 0; k < 9; ++k) {
    CHECK(g.phase(k, k) == 0.0);
    for (std::size_t l = 0; l < 9; ++l) {
      CHECK(g.phase(k, l) == g.phase(l, k));
      CHECK(g.phase(k, l) == doctest::Approx(ref[k][l]).epsilon(1e-12));
    }
  }
}

TEST_CASE("is_entangled_partition examples") {
  InteractionGraph empty(4);
  for (std::size_t mask = 1; mask < 15; ++mask) {
    CHECK_FALSE(is_entangled_partition(empty, Partition(test_support::subset_of(mask, 4), 4)));
  }
  InteractionGraph g(2);
  g.add_phase(0, 1, pi);
  CHECK(is_entangled_partition(g, Partition::single(0, 2)));
  g.add_phase(0, 1, pi);
  CHECK_FALSE(is_entangled_partition(g, Partition::single(0, 2)));
  const DensityMatrix rho = brute_force_reduced(g, Partition::single(0, 2));
  CHECK(rho.purity() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("graph criterion matches rank on every bipartition of random graphs") {
  Rng rng(12, 0);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng() % 9);
    InteractionGraph g = random_graph(n, rng.uniform(), rng);
    if (trial % 4 == 0 && n > 2) g.add_phase(0, 1, 2 * pi - g.phase(0, 1));  // exact 2π edge
    for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << n); ++mask) {
      const Partition p(test_support::subset_of(mask, n), n);
      if (p.size() > 6) continue;
      const Eigen::MatrixXcd rho = oracle::reduced(test_support::phases_of(g), {p.members().begin(), p.members().end()});
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
      const auto rank = (es.eigenvalues().array() > 1e-9).count();
      CHECK(is_entangled_partition(g, p) == (rank > 1));
    }
  }
}

TEST_CASE("path_exists examples") {
  InteractionGraph chain(3);
  chain.add_phase(0, 1, 1.0);
  chain.add_phase(1, 2, 1.0);
  CHECK(path_exists(chain, 0, 2));

  InteractionGraph split(4);
  split.add_phase(0, 1, 1.0);
  split.add_phase(2, 3, 1.0);
  CHECK_FALSE(path_exists(split, 0, 3));

  Rng rng(3, 0);
  const InteractionGraph full = random_graph(7, 1.0, rng);
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = 0; j < 7; ++j) {
      if (i != j) CHECK(path_exists(full, i, j));
    }
  }
}

TEST_CASE("connected_components examples and cross-check") {
  InteractionGraph g(3);
  CHECK(connected_components(g).size() == 3);
  g.add_phase(0, 1, 0.5);
  const auto c = connected_components(g);
  REQUIRE(c.size() == 2);
  CHECK(c[0] == std::vector<std::size_t>{0, 1});
  CHECK(c[1] == std::vector<std::size_t>{2});

  InteractionGraph ring(6);
  for (std::size_t k = 0; k < 6; ++k) ring.add_phase(k, (k + 1) % 6, 0.3);
  CHECK(connected_components(ring).size() == 1);
  CHECK(ring.largest_component_size() == 6);

  Rng rng(5, 0);
  for (int trial = 0; trial < 30; ++trial) {
    InteractionGraph r = random_graph(15, 0.12, rng);
    CHECK(connected_components(r) == connected_components_scan(r));
    // cancel one edge exactly; components must refine
    std::size_t k = 0, l = 0;
    r.for_each_pair([&](std::size_t a, std::size_t b, double) { k = a, l = b; });
    const auto before = connected_components(r);
    if (k != l) r.add_phase(k, l, -r.phase(k, l));
    const auto after = connected_components(r);
    CHECK(after == connected_components_scan(r));
    CHECK(after.size() >= before.size());
    for (const auto& cluster : after) {
      const bool inside = std::any_of(before.begin(), before.end(), [&](const auto& big) {
        return std::includes(big.begin(), big.end(), cluster.begin(), cluster.end());
      });
      CHECK(inside);
    }
  }
}

TEST_CASE("shortest_path is chordless and minimal") {
  InteractionGraph g(5);
  g.add_phase(0, 1, 1.0);
  g.add_phase(1, 2, 1.0);
  g.add_phase(2, 3, 1.0);
  g.add_phase(0, 4, 1.0);
  g.add_phase(4, 3, 1.0);
  const auto p = shortest_path(g, 0, 3);
  CHECK(p == std::vector<std::size_t>{0, 4, 3});
  InteractionGraph split(3);
  CHECK(shortest_path(split, 0, 2).empty());
}

TEST_CASE("max_entangled_distance") {
  const LatticeDims dims{10, 10};
  InteractionGraph g(3);
  std::vector<Site> where{{0, 0}, {3, 4}, {9, 9}};
  CHECK(max_entangled_distance(g, where, dims) == 0);
  g.add_phase(0, 1, 0.4);
  CHECK(max_entangled_distance(g, where, dims) == 7);

  // chain across the lattice versus a direct pairwise scan
  const LatticeDims strip{20, 6};
  InteractionGraph chain(20);
  std::vector<Site> sites;
  for (int x = 0; x < 20; ++x) sites.push_back({x, x % 6});
  for (std::size_t k = 0; k + 1 < 20; ++k) chain.add_phase(k, k + 1, 0.2);
  int direct = 0;
  for (std::size_t a = 0; a < 20; ++a) {
    for (std::size_t b = 0; b < 20; ++b) direct = std::max(direct, lattice_distance(sites[a], sites[b], strip));
  }
  CHECK(max_entangled_distance(chain, sites, strip) == direct);
  CHECK(direct <= lattice_diameter(strip));
}

TEST_CASE("lattice distance is Manhattan with wrap-around") {
  const LatticeDims dims{8, 5};
  CHECK(lattice_distance({0, 0}, {7, 0}, dims) == 1);
  CHECK(lattice_distance({0, 0}, {4, 2}, dims) == 6);
  CHECK(lattice_distance({1, 1}, {1, 4}, dims) == 2);
  CHECK(lattice_diameter(dims) == 6);
}

TEST_CASE("graph snapshots round-trip through JSON") {
  Rng rng(8, 0);
  const InteractionGraph g = random_graph(9, 0.4, rng);
  const InteractionGraph back = graph_from_json(graph_to_json(g));
  REQUIRE(back.size() == g.size());
  for (std::size_t k = 0; k < 9; ++k) {
    for (std::size_t l = 0; l < 9; ++l) CHECK(back.phase(k, l) == g.phase(k, l));
  }
  CHECK_THROWS_AS(graph_from_json(R"({"schema":"spingas.graph.v1","n_particles":2,"edges":[[0,0,1.0]]})"),
                  ConfigError);
}

}  // TEST_SUITE
