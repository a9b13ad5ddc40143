#include <benchmark/benchmark.h>

#include <numeric>
#include <random>
#include <vector>

#include "spingas/entanglement.hpp"
#include "spingas/lattice.hpp"
#include "spingas/oracle.hpp"
#include "spingas/quantum_state.hpp"

using namespace spingas;

namespace {

InteractionGraph dense_graph(std::size_t n, std::uint64_t seed) {
  Rng rng(seed, 0);
  return random_graph(n, 0.5, rng);
}

std::vector<std::size_t> first(std::size_t k) {
  std::vector<std::size_t> a(k);
  std::iota(a.begin(), a.end(), 0);
  return a;
}

void BM_CoherenceFactor(benchmark::State& state) {
  const auto partners = static_cast<std::size_t>(state.range(0));
  InteractionGraph g(partners + 2);
  Rng rng(1, 0);
  for (std::size_t k = 2; k < partners + 2; ++k) {
    g.add_phase(0, k, 6.0 * rng.uniform() + 0.1);
    g.add_phase(1, k, 6.0 * rng.uniform() + 0.1);
  }
  const Partition p({0, 1}, g.size());
  const int z[] = {1, -1};
  for (auto _ : state) benchmark::DoNotOptimize(coherence_factor(g, p, z));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CoherenceFactor)->RangeMultiplier(10)->Range(10, 100000)->Complexity();

void BM_ReducedDensityMatrix(benchmark::State& state) {
  const auto na = static_cast<std::size_t>(state.range(0));
  const InteractionGraph g = dense_graph(40, 2);
  const Partition p(first(na), g.size());
  for (auto _ : state) benchmark::DoNotOptimize(reduced_density_matrix(g, p, true));
}
BENCHMARK(BM_ReducedDensityMatrix)->DenseRange(2, 8, 2)->Unit(benchmark::kMicrosecond);

void BM_BlockEntropy(benchmark::State& state) {
  const InteractionGraph g = dense_graph(40, 3);
  const Partition p(first(8), g.size());
  for (auto _ : state) benchmark::DoNotOptimize(block_entropy(g, p));
}
BENCHMARK(BM_BlockEntropy)->Unit(benchmark::kMillisecond);

void BM_HopStep(benchmark::State& state) {
  LatticeConfig c;
  c.dims = {static_cast<int>(state.range(0)), 100};
  c.particles = static_cast<std::size_t>(c.dims.site_count() / 4);
  Rng rng(4, 0);
  LatticeState s = initialize_lattice(c, rng);
  InteractionGraph g(c.total_particles());
  for (auto _ : state) hop_step(s, c, g, rng);
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * c.particles));
}
BENCHMARK(BM_HopStep)->Arg(100)->Arg(400)->Unit(benchmark::kMicrosecond);

void BM_UnionFind(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (auto _ : state) {
    InteractionGraph g(n);
    for (std::size_t e = 0; e < 2 * n; ++e) {
      const std::size_t k = pick(gen);
      const std::size_t l = pick(gen);
      if (k != l) g.add_phase(k, l, 0.3);
    }
    benchmark::DoNotOptimize(g.same_component(0, n - 1));
  }
}
BENCHMARK(BM_UnionFind)->Arg(1000)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
