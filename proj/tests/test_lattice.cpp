#include <doctest.h>

#include <cmath>
#include <vector>

#include "spingas/errors.hpp"
#include "spingas/lattice.hpp"
#include "spingas/quantum_state.hpp"

using namespace spingas;

namespace {

LatticeConfig small(int m, std::size_t particles) {
  LatticeConfig c;
  c.dims = {m, m};
  c.particles = particles;
  return c;
}

std::vector<double> grid(double stop, double step) {
  std::vector<double> t;
  for (int i = 0; i * step <= stop + 1e-9; ++i) t.push_back(i * step);
  return t;
}

}  // namespace

TEST_SUITE("lattice") {

TEST_CASE("config validation") {
  LatticeConfig c = small(10, 20);
  c.validate();
  c.hop_rate = 6.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small(10, 101);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small(10, 10);
  c.probes.count = 2;
  c.probes.offsets = {{0, 0}};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.probes.offsets.clear();
  c.probes.rule = ProbeRule::crossing;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(probe_motion_from_string("dragged") == ProbeMotion::dragged);
  CHECK_THROWS_AS(axis_from_string("z"), ConfigError);
}

TEST_CASE("steps_for_time") {
  CHECK(steps_for_time(2.5, 0.1) == 25);
  CHECK(steps_for_time(0.0, 0.1) == 0);
  CHECK_THROWS_AS(steps_for_time(0.25, 0.1), PreconditionError);
  CHECK_THROWS_AS(steps_for_time(-1.0, 0.1), PreconditionError);
}

TEST_CASE("frozen gas accumulates nearest-neighbour phases linearly") {
  LatticeConfig c = small(6, 12);
  c.hop_rate = 0.0;
  Rng rng(61, 0);
  LatticeState s = initialize_lattice(c, rng);
  const LatticeState start = s;
  InteractionGraph g(c.total_particles());
  for (int step = 0; step < 37; ++step) hop_step(s, c, g, rng);
  CHECK(s.positions == start.positions);
  for (std::size_t k = 0; k < c.particles; ++k) {
    for (std::size_t l = 0; l < c.particles; ++l) {
      if (k == l) continue;
      const bool adjacent = lattice_distance(s.positions[k], s.positions[l], c.dims) == 1;
      CHECK(g.phase(k, l) == doctest::Approx(adjacent ? 37 * c.coupling * c.dt : 0.0));
    }
  }
}

TEST_CASE("full lattice is jammed") {
  LatticeConfig c = small(5, 25);
  Rng rng(62, 0);
  LatticeState s = initialize_lattice(c, rng);
  const LatticeState start = s;
  InteractionGraph g(c.total_particles());
  for (int step = 0; step < 50; ++step) hop_step(s, c, g, rng);
  CHECK(s.positions == start.positions);
}

TEST_CASE("side of length two counts each neighbour pair once") {
  LatticeConfig c;
  c.dims = {2, 1};
  c.particles = 2;
  c.hop_rate = 0.0;
  Rng rng(63, 0);
  LatticeState s = initialize_lattice(c, rng);
  InteractionGraph g(2);
  hop_step(s, c, g, rng);
  CHECK(g.phase(0, 1) == doctest::Approx(c.coupling * c.dt));
}

TEST_CASE("background coupling can be switched off") {
  LatticeConfig c = small(6, 30);
  c.background_coupling = false;
  Rng rng(64, 0);
  LatticeState s = initialize_lattice(c, rng);
  InteractionGraph g(c.total_particles());
  for (int step = 0; step < 20; ++step) hop_step(s, c, g, rng);
  CHECK(g.stored_pairs() == 0);
}

TEST_CASE("exclusion holds after every step") {
  LatticeConfig c = small(12, 90);
  c.probes.count = 2;
  c.probes.hop_rate = 1.0;
  Rng rng(65, 0);
  LatticeState s = initialize_lattice(c, rng);
  InteractionGraph g(c.total_particles());
  for (int step = 0; step < 2000; ++step) {
    hop_step(s, c, g, rng);
    REQUIRE(s.consistent());
  }
}

TEST_CASE("site occupation probability equals the filling") {
  LatticeConfig c = small(8, 19);
  c.background_coupling = false;
  Rng rng(66, 0);
  LatticeState s = initialize_lattice(c, rng);
  InteractionGraph g(c.total_particles());
  double occupied = 0.0;
  const int steps = 40000;
  for (int step = 0; step < steps; ++step) {
    hop_step(s, c, g, rng);
    occupied += s.occupancy[0] >= 0 ? 1.0 : 0.0;
  }
  CHECK(occupied / steps == doctest::Approx(c.filling()).epsilon(0.15));
}

TEST_CASE("hop attempts follow the hop rate") {
  LatticeConfig c = small(40, 16);  // dilute: almost no rejections
  c.background_coupling = false;
  Rng rng(67, 0);
  LatticeState s = initialize_lattice(c, rng);
  InteractionGraph g(c.total_particles());
  double moved = 0.0;
  const int steps = 5000;
  for (int step = 0; step < steps; ++step) {
    const auto before = s.positions;
    hop_step(s, c, g, rng);
    for (std::size_t k = 0; k < c.particles; ++k) moved += before[k] == s.positions[k] ? 0.0 : 1.0;
  }
  const double expected = c.hop_rate * c.dt * (1.0 - c.filling());
  CHECK(moved / (steps * c.particles) == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("fixed probe on a parked particle accumulates g t") {
  LatticeConfig c = small(4, 16);
  c.hop_rate = 0.0;
  c.probes.count = 1;
  c.probes.origin = Site{1, 2};
  Rng rng(68, 0);
  LatticeState s = initialize_lattice(c, rng);
  InteractionGraph g(c.total_particles());
  for (int step = 0; step < 50; ++step) hop_step(s, c, g, rng);
  const auto occupant = static_cast<std::size_t>(s.occupancy[c.dims.index({1, 2})]);
  CHECK(g.phase(c.probe_index(0), occupant) == doctest::Approx(c.coupling * 50 * c.dt));
}

TEST_CASE("dragged probes advance floor(v t) and pick up crossing phases") {
  LatticeConfig c = small(10, 100);
  c.hop_rate = 0.0;
  c.background_coupling = false;
  c.probes.count = 1;
  c.probes.motion = ProbeMotion::dragged;
  c.probes.rule = ProbeRule::crossing;
  c.probes.speed = 2.5;  // 0.25 sites per step
  c.probes.origin = Site{3, 4};
  Rng rng(69, 0);
  LatticeState s = initialize_lattice(c, rng);
  InteractionGraph g(c.total_particles());
  for (int step = 1; step <= 23; ++step) {
    hop_step(s, c, g, rng);
    const int moved = static_cast<int>(std::floor(2.5 * step * 0.1 + 1e-9));
    CHECK(s.probe_positions[0] == c.dims.wrap({3 + moved, 4}));
  }
  // 5 sites entered, each fully occupied
  std::size_t touched = 0;
  for (std::size_t k = 0; k < c.particles; ++k) {
    const double phase = g.phase(c.probe_index(0), k);
    if (phase != 0.0) {
      ++touched;
      CHECK(phase == doctest::Approx(c.probes.crossing_phase));
    }
  }
  CHECK(touched == 5);
}

TEST_CASE("co-located fixed probes see identical collision histories") {
  LatticeConfig c = small(8, 32);
  c.probes.count = 2;
  c.probes.separation = 0;
  std::vector<double> times{0.0, 5.0, 20.0};
  Rng rng(70, 0);
  run_lattice_realization(c, times, rng, [&](std::size_t, const LatticeState&, const InteractionGraph& g) {
    const std::size_t a = c.probe_index(0);
    const std::size_t b = c.probe_index(1);
    for (std::size_t k = 0; k < c.particles; ++k) CHECK(g.phase(a, k) == g.phase(b, k));
    const int z[] = {1, -1};
    const CoherenceFactor cf = coherence_factor(g, Partition({a, b}, c.total_particles()), z);
    CHECK(std::abs(cf.value() - cplx(1.0, 0.0)) < 1e-14);
  });
}

TEST_CASE("clusters grow exponentially at low filling") {
  LatticeConfig c = small(20, 40);
  const auto times = grid(20.0, 1.0);
  const ClusterSeries s = cluster_timeseries(c, times, {40, 71, 1});
  CHECK(s.largest_cluster.rows.front().mean == 1.0);
  CHECK(s.max_distance.rows.front().mean == 0.0);
  std::vector<double> x, y;
  for (const SeriesRow& r : s.largest_cluster.rows) {
    if (r.t >= 1.0 && r.mean < 0.3 * c.particles) {
      x.push_back(r.t);
      y.push_back(std::log(r.mean));
    }
  }
  REQUIRE(x.size() >= 4);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  CHECK(sxy > 0.0);
  CHECK(sxy * sxy / (sxx * syy) > 0.9);
}

TEST_CASE("percolated clusters span the lattice") {
  LatticeConfig c = small(20, 200);
  const auto times = grid(12.0, 1.0);
  const ClusterSeries s = cluster_timeseries(c, times, {10, 72, 1});
  CHECK(s.t0_reached == 10);
  CHECK(s.t0 > 0.0);
  for (const SeriesRow& r : s.largest_cluster.rows) CHECK(r.mean <= c.particles);
  CHECK(s.max_distance.rows.back().mean >= 0.9 * lattice_diameter(c.dims));
}

TEST_CASE("block entropy series") {
  LatticeConfig c = small(20, 100);
  const auto times = grid(6.0, 1.0);
  const EnsembleOptions opt{40, 72, 1};
  const EntropySeries s4 = block_entropy_timeseries(c, 4, times, opt);
  const EntropySeries s8 = block_entropy_timeseries(c, 8, times, opt);
  CHECK(s4.von_neumann.rows.front().mean == 0.0);
  for (std::size_t r = 2; r < times.size(); ++r) {
    const SeriesRow& a = s4.von_neumann.rows[r];
    const SeriesRow& b = s8.von_neumann.rows[r];
    CHECK(b.mean < 2 * a.mean + 3 * std::hypot(b.std_error, 2 * a.std_error));
    CHECK(s4.renyi2.rows[r].mean <= s4.von_neumann.rows[r].mean + 1e-12);
  }
}

TEST_CASE("halving dt leaves the block entropy nearly unchanged") {
  LatticeConfig c = small(12, 60);
  const std::vector<double> times{0.0, 2.0};
  const EnsembleOptions opt{300, 73, 1};
  const double coarse = block_entropy_timeseries(c, 2, times, opt).von_neumann.rows[1].mean;
  c.dt = 0.05;
  const EntropySeries fine = block_entropy_timeseries(c, 2, times, opt);
  CHECK(std::abs(fine.von_neumann.rows[1].mean - coarse) < 4 * fine.von_neumann.rows[1].std_error + 0.05);
}

TEST_CASE("slow probes entangle faster") {
  // Separated probes; co-located fixed probes instead saturate early.
  LatticeConfig c = small(20, 200);
  c.probes.count = 2;
  c.probes.separation = 8;
  const std::vector<double> times{0.0, 1.0, 2.0, 3.0};
  const EnsembleOptions opt{1600, 74, 1};
  const EntropySeries fixed = probe_entropy_timeseries(c, times, opt);
  c.probes.hop_rate = 0.2;
  const EntropySeries moving = probe_entropy_timeseries(c, times, opt);
  CHECK(fixed.von_neumann.rows.front().mean == 0.0);
  for (std::size_t r = 1; r < times.size(); ++r) {
    const SeriesRow& a = fixed.von_neumann.rows[r];
    const SeriesRow& b = moving.von_neumann.rows[r];
    const double margin = 3 * std::hypot(a.std_error, b.std_error);
    if (r == 1) {
      CHECK(a.mean > b.mean - margin);
    } else {
      CHECK(a.mean - b.mean > margin);
    }
  }
}

}  // TEST_SUITE
