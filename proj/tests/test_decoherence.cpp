#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "support.hpp"
#include "spingas/decoherence.hpp"
#include "spingas/entanglement.hpp"
#include "spingas/errors.hpp"
#include "spingas/oracle.hpp"

using namespace spingas;

namespace {

// Probes 0, 1 plus a background of `n` particles with random couplings.
InteractionGraph random_background(std::size_t n, Rng& rng) {
  InteractionGraph g(n + 2);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  for (std::size_t k = 2; k < n + 2; ++k) {
    if (rng.uniform() < 0.6) g.add_phase(0, k, phase(rng));
    if (rng.uniform() < 0.6) g.add_phase(1, k, phase(rng));
  }
  return g;
}

double min_eigenvalue(const DensityMatrix& rho) { return rho.spectrum()(0); }

}  // namespace

TEST_SUITE("decoherence") {

TEST_CASE("channel from a graph satisfies the coefficient invariants") {
  Rng rng(81, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const InteractionGraph g = random_background(12, rng);
    const ProbeChannel ch = ProbeChannel::from_graph(g, Partition({0, 1}, g.size()));
    CHECK(ch.invariant_error() < 1e-12);
    const int zero[] = {0, 0};
    CHECK(ch.coefficient(zero) == cplx(1.0, 0.0));
  }
}

TEST_CASE("channel output matches the reduced state of the graph") {
  Rng rng(82, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const InteractionGraph g = random_background(8, rng);
    const Partition probes({0, 1}, g.size());
    const DensityMatrix out =
        apply_channel(ProbeChannel::from_graph(g, probes), DensityMatrix(Eigen::MatrixXcd::Constant(4, 4, 0.25)));
    const Eigen::MatrixXcd expected = oracle::reduced(test_support::phases_of(g), {0, 1});
    CHECK((out.matrix() - expected).norm() < 1e-12);
  }
}

TEST_CASE("identity and fully dephasing channels") {
  const DensityMatrix bell = probe_state(ProbeState::phi_plus);
  const DensityMatrix same = apply_channel(ProbeChannel::identity(2), bell);
  CHECK((same.matrix() - bell.matrix()).norm() < 1e-15);
  const DensityMatrix diag = apply_channel(ProbeChannel::fully_dephasing(2), bell);
  CHECK(diag(0, 3) == cplx(0.0, 0.0));
  CHECK(diag(0, 0).real() == doctest::Approx(0.5));
  CHECK(concurrence(diag) == doctest::Approx(0.0));
  CHECK(concurrence(same) == doctest::Approx(1.0));
}

TEST_CASE("averaged channel is the coefficient mean") {
  std::vector<ProbeChannel> channels{ProbeChannel::identity(2), ProbeChannel::fully_dephasing(2)};
  const ProbeChannel avg = average_channel(channels);
  const int z[] = {1, -1};
  CHECK(std::abs(avg.coefficient(z) - cplx(0.5, 0.0)) < 1e-15);
  CHECK(avg.invariant_error() < 1e-15);
}

TEST_CASE("channels map states to states") {
  Rng rng(83, 0);
  const std::vector<DensityMatrix> inputs{probe_state(ProbeState::psi_plus),
                                          probe_state(ProbeState::phi_plus),
                                          probe_state(ProbeState::cluster),
                                          DensityMatrix(Eigen::MatrixXcd::Identity(4, 4) / 4.0)};
  for (int trial = 0; trial < 20; ++trial) {
    const InteractionGraph g = random_background(10, rng);
    const ProbeChannel ch = ProbeChannel::from_graph(g, Partition({0, 1}, g.size()));
    for (const DensityMatrix& in : inputs) {
      const DensityMatrix out = apply_channel(ch, in);
      CHECK(out.trace() == doctest::Approx(1.0));
      CHECK(out.hermiticity_error() < 1e-12);
      CHECK(min_eigenvalue(out) > -1e-10);
    }
  }
}

TEST_CASE("probe coherences factorize when no partner is shared") {
  InteractionGraph g(6);
  g.add_phase(0, 2, 0.7);
  g.add_phase(0, 3, 1.9);
  g.add_phase(1, 4, 0.4);
  g.add_phase(1, 5, 2.6);
  const ProbeChannel both = ProbeChannel::from_graph(g, Partition({0, 1}, 6));
  const ProbeChannel a = ProbeChannel::from_graph(g, Partition({0}, 6));
  const ProbeChannel b = ProbeChannel::from_graph(g, Partition({1}, 6));
  for (int z0 : {-1, 0, 1}) {
    for (int z1 : {-1, 0, 1}) {
      const int z[] = {z0, z1};
      const int za[] = {z0};
      const int zb[] = {z1};
      CHECK(std::abs(both.coefficient(z) - a.coefficient(za) * b.coefficient(zb)) < 1e-14);
    }
  }
}

TEST_CASE("shared partners damp and protect coherences") {
  InteractionGraph g(3);
  g.add_phase(0, 2, 1.0);
  g.add_phase(1, 2, 1.0);
  const ProbeChannel ch = ProbeChannel::from_graph(g, Partition({0, 1}, 3));
  const int anti[] = {1, -1};
  const int same[] = {1, 1};
  CHECK(std::abs(ch.coefficient(anti) - cplx(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(ch.coefficient(same)) == doctest::Approx(std::abs(std::cos(1.0))));
}

TEST_CASE("markovian analytic decay") {
  CHECK(markovian_analytic(0.5, 0.1, 0) == 1.0);
  // ν = 1: |cos(δφ/2)|^{2k}
  CHECK(markovian_analytic(1.0, 0.1, 100) == doctest::Approx(std::pow(std::cos(0.05), 200)));
  CHECK(markovian_analytic(1.0, 0.1, 100) == doctest::Approx(0.7788).epsilon(1e-3));
  CHECK(markovian_analytic(0.0, 0.1, 100) == 1.0);
  const double nu = 0.3, dphi = 0.2;
  const std::complex<double> one = nu * std::polar(1.0, dphi / 2) * std::cos(dphi / 2) + (1 - nu);
  CHECK(markovian_analytic(nu, dphi, 7) == doctest::Approx(std::pow(std::norm(one), 7)));
}

TEST_CASE("markovian analytic matches independent crossings") {
  // Each step each probe enters a site that is occupied with probability ν
  // by a fresh particle; the two probes never share a partner.
  const double nu = 0.4, dphi = 0.3;
  const std::size_t k = 10;
  Rng rng(84, 0);
  const int z[] = {1, 1};
  std::vector<ProbeChannel> channels;
  for (int r = 0; r < 20000; ++r) {
    InteractionGraph g(2 + 2 * k);
    for (std::size_t s = 0; s < 2 * k; ++s) {
      if (rng.uniform() < nu) g.add_phase(s % 2, 2 + s, dphi);
    }
    channels.push_back(ProbeChannel::from_graph(g, Partition({0, 1}, g.size())));
  }
  const JackknifeResult avg = averaged_coherence(channels, z);
  CHECK(std::abs(avg.value - markovian_analytic(nu, dphi, k)) < 4 * avg.std_error + 1e-3);
}

TEST_CASE("probe states") {
  CHECK(concurrence(probe_state(ProbeState::psi_plus)) == doctest::Approx(1.0));
  CHECK(concurrence(probe_state(ProbeState::cluster)) == doctest::Approx(1.0));
  CHECK(probe_state(ProbeState::psi_plus).purity() == doctest::Approx(1.0));
  CHECK(probe_state_from_string(to_string(ProbeState::cluster)) == ProbeState::cluster);
  CHECK_THROWS_AS(probe_state_from_string("ghz"), ConfigError);
}

TEST_CASE("cluster concurrence from Bell concurrence") {
  CHECK(cluster_from_bell_concurrence(1.0) == doctest::Approx(1.0));
  CHECK(cluster_from_bell_concurrence(0.0) == 0.0);
  CHECK(cluster_from_bell_concurrence(0.1) == 0.0);
  const double c = 0.5;
  CHECK(cluster_from_bell_concurrence(c) == doctest::Approx(0.5 * (-1 + 2 * std::sqrt(c) + c)));
  // zero crossing at (√2 - 1)²
  const double root = (std::sqrt(2.0) - 1) * (std::sqrt(2.0) - 1);
  CHECK(cluster_from_bell_concurrence(root) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("epsilon distribution") {
  InteractionGraph g(4);
  g.add_phase(0, 2, 0.6);
  g.add_phase(0, 3, 0.2);
  Rng rng(85, 0);
  const int z[] = {1};
  const EpsilonStats e = epsilon_distribution(g, Partition({0}, 4), z, 100, rng, 8);
  CHECK(e.exact);
  // ε ∈ {0, 0.2, 0.6, 0.8} equiprobable
  CHECK(e.mean == doctest::Approx(0.4));
  CHECK(e.sigma == doctest::Approx(std::sqrt(0.09 + 0.01)));
  double total = 0.0;
  for (double p : e.histogram) total += p;
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("two-point epsilon distribution") {
  InteractionGraph g(2);
  g.add_phase(0, 1, std::numbers::pi);
  Rng rng(89, 0);
  const int z[] = {1};
  const EpsilonStats e = epsilon_distribution(g, Partition({0}, 2), z, 100, rng, 2);
  CHECK(e.mean == doctest::Approx(std::numbers::pi / 2));
  CHECK(e.sigma == doctest::Approx(std::numbers::pi / 2));
  CHECK(e.histogram[0] == doctest::Approx(0.5));
  CHECK(e.histogram[1] == doctest::Approx(0.5));
  CHECK(coherence_factor(g, Partition({0}, 2), z).magnitude() < 1e-15);
  const InteractionGraph empty(2);
  const EpsilonStats zero = epsilon_distribution(empty, Partition({0}, 2), z, 100, rng);
  CHECK(zero.mean == 0.0);
  CHECK(zero.sigma == 0.0);
}

TEST_CASE("sampled epsilon distribution") {
  const std::size_t partners = 40;
  InteractionGraph g(partners + 1);
  for (std::size_t k = 1; k <= partners; ++k) g.add_phase(0, k, 0.1);
  Rng rng(86, 0);
  const int z[] = {1};
  const EpsilonStats e = epsilon_distribution(g, Partition({0}, g.size()), z, 20000, rng);
  CHECK_FALSE(e.exact);
  CHECK(e.samples == 20000);
  CHECK(e.sigma == doctest::Approx(0.05 * std::sqrt(partners)).epsilon(0.03));
  CHECK(e.mean == doctest::Approx(0.05 * partners).epsilon(0.01));
}

TEST_CASE("regime exponent fit") {
  std::vector<double> t, linear, diffusive;
  for (int i = 1; i <= 40; ++i) {
    t.push_back(0.05 * i);
    linear.push_back(0.5 * t.back());
    diffusive.push_back(0.5 * std::sqrt(t.back()));
  }
  const RegimeFit a = fit_regime_exponent(t, linear);
  CHECK(a.exponent == doctest::Approx(1.0).epsilon(0.01));
  CHECK(a.regime == "non_markovian");
  const RegimeFit b = fit_regime_exponent(t, diffusive);
  CHECK(std::abs(b.exponent - 0.5) < 0.15);
  CHECK(b.regime == "markovian");
  const std::vector<double> flat(t.size(), 5.0);
  CHECK(fit_regime_exponent(t, flat).regime == "undetermined");
}

TEST_CASE("both averaging orders") {
  // Mixing opposite phases: each realization stays maximally entangled,
  // their average does not.
  const double phi = std::numbers::pi / 2;
  std::vector<ProbeChannel> channels;
  for (double sign : {1.0, -1.0}) {
    InteractionGraph g(3);
    g.add_phase(0, 2, sign * phi);
    channels.push_back(ProbeChannel::from_graph(g, Partition({0, 1}, 3)));
  }
  const ConcurrencePoint p = ensemble_concurrence(channels, probe_state(ProbeState::phi_plus));
  CHECK(p.mean_of_states <= 1.0 + 1e-12);
  CHECK(p.averaged_state <= p.mean_of_states + 1e-12);
  const std::vector<ProbeChannel> ideal(5, ProbeChannel::identity(2));
  const ConcurrencePoint q = ensemble_concurrence(ideal, probe_state(ProbeState::psi_plus));
  CHECK(q.averaged_state == doctest::Approx(1.0));
  CHECK(q.mean_of_states == doctest::Approx(1.0));
}

TEST_CASE("probe channel series on the lattice") {
  LatticeConfig c;
  c.dims = {10, 10};
  c.particles = 50;
  c.probes.count = 2;
  const std::vector<double> times{0.0, 1.0, 3.0};
  const ProbeChannelSeries s = probe_channel_timeseries(c, times, {6, 87, 1});
  REQUIRE(s.channels.size() == times.size());
  for (const auto& row : s.channels) {
    CHECK(row.size() == 6);
    for (const ProbeChannel& ch : row) CHECK(ch.invariant_error() < 1e-12);
  }
  const int z[] = {1, 1};
  for (const ProbeChannel& ch : s.channels.front()) CHECK(ch.coefficient(z) == cplx(1.0, 0.0));
}

TEST_CASE("concurrence against distance") {
  LatticeConfig c;
  c.dims = {40, 10};
  c.particles = 200;
  c.probes.count = 1;
  c.probes.motion = ProbeMotion::dragged;
  c.probes.speed = 1.0;
  const std::vector<ProbeState> states{ProbeState::psi_plus};
  const std::vector<int> distances{0, 4};
  const auto rows = concurrence_vs_distance(c, states, 5.0, distances, {10, 88, 1});
  REQUIRE(rows.size() == 2);
  // co-moving probes on the same site keep ψ+ intact
  CHECK(rows[0].distance == 0);
  CHECK(rows[0].concurrence.averaged_state == doctest::Approx(1.0));
  CHECK(rows[1].concurrence.averaged_state <= 1.0 + 1e-12);
}

}  // TEST_SUITE
