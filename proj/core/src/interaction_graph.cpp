#include "spingas/interaction_graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>

#include "spingas/errors.hpp"

namespace spingas {

bool is_effective_phase(double phase) noexcept {
  return std::abs(std::remainder(phase, kTwoPi)) > kEdgeTolerance;
}

// ---------------------------------------------------------------------------
// Partition

Partition::Partition(std::vector<std::size_t> members, std::size_t n_particles)
    : members_(std::move(members)), slot_(n_particles, -1) {
  if (members_.empty()) {
    throw PreconditionError("partition: subset A must not be empty");
  }
  std::sort(members_.begin(), members_.end());
  for (std::size_t pos = 0; pos < members_.size(); ++pos) {
    const std::size_t k = members_[pos];
    if (k >= n_particles) {
      throw PreconditionError("partition: index " + std::to_string(k) +
                              " out of range for N = " + std::to_string(n_particles));
    }
    if (slot_[k] >= 0) {
      throw PreconditionError("partition: duplicate index " + std::to_string(k));
    }
    slot_[k] = static_cast<int>(pos);
  }
}

Partition Partition::single(std::size_t k, std::size_t n_particles) {
  return Partition({k}, n_particles);
}

std::vector<std::size_t> Partition::complement() const {
  std::vector<std::size_t> out;
  out.reserve(complement_size());
  for (std::size_t k = 0; k < slot_.size(); ++k) {
    if (slot_[k] < 0) out.push_back(k);
  }
  return out;
}

// ---------------------------------------------------------------------------
// InteractionGraph

InteractionGraph::InteractionGraph(std::size_t n_particles)
    : rows_(n_particles), parent_(n_particles), set_size_(n_particles, 1) {
  std::iota(parent_.begin(), parent_.end(), 0u);
}

void InteractionGraph::check_index(std::size_t k) const {
  if (k >= rows_.size()) {
    throw PreconditionError("interaction graph: index " + std::to_string(k) +
                            " out of range for N = " + std::to_string(rows_.size()));
  }
}

Neighbor* InteractionGraph::find_entry(std::size_t k, std::size_t l) {
  auto& row = rows_[k];
  auto it = std::lower_bound(row.begin(), row.end(), l,
                             [](const Neighbor& n, std::size_t v) { return n.index < v; });
  return (it != row.end() && it->index == l) ? &*it : nullptr;
}

const Neighbor* InteractionGraph::find_entry(std::size_t k, std::size_t l) const {
  const auto& row = rows_[k];
  auto it = std::lower_bound(row.begin(), row.end(), l,
                             [](const Neighbor& n, std::size_t v) { return n.index < v; });
  return (it != row.end() && it->index == l) ? &*it : nullptr;
}

void InteractionGraph::insert_entry(std::size_t k, std::size_t l, double phase) {
  auto& row = rows_[k];
  auto it = std::lower_bound(row.begin(), row.end(), l,
                             [](const Neighbor& n, std::size_t v) { return n.index < v; });
  row.insert(it, Neighbor{static_cast<std::uint32_t>(l), phase});
}

void InteractionGraph::add_phase(std::size_t k, std::size_t l, double delta) {
  check_index(k);
  check_index(l);
  if (k == l) {
    throw PreconditionError("add_phase: self-interaction (k == l == " + std::to_string(k) +
                            ")");
  }
  if (!std::isfinite(delta)) {
    throw PreconditionError("add_phase: non-finite phase increment");
  }
  bool was_edge = false;
  double updated = delta;
  if (Neighbor* a = find_entry(k, l)) {
    was_edge = is_effective_phase(a->phase);
    a->phase += delta;
    find_entry(l, k)->phase += delta;
    updated = a->phase;
  } else {
    insert_entry(k, l, delta);
    insert_entry(l, k, delta);
    ++stored_pairs_;
  }
  const bool is_edge = is_effective_phase(updated);
  if (is_edge && !was_edge) {
    unite(static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(l));
  } else if (was_edge && !is_edge) {
    rebuild_components();
  }
}

double InteractionGraph::phase(std::size_t k, std::size_t l) const {
  check_index(k);
  check_index(l);
  const Neighbor* e = find_entry(k, l);
  return e ? e->phase : 0.0;
}

bool InteractionGraph::has_edge(std::size_t k, std::size_t l) const {
  return k != l && is_effective_phase(phase(k, l));
}

void InteractionGraph::for_each_pair(
    const std::function<void(std::size_t, std::size_t, double)>& fn) const {
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    for (const Neighbor& n : rows_[k]) {
      if (n.index > k) fn(k, n.index, n.phase);
    }
  }
}

std::uint32_t InteractionGraph::root(std::uint32_t k) const {
  while (parent_[k] != k) k = parent_[k];
  return k;
}

void InteractionGraph::unite(std::uint32_t a, std::uint32_t b) {
  // Path halving on the writer side keeps const queries cheap.
  auto find_mut = [this](std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  };
  a = find_mut(a);
  b = find_mut(b);
  if (a == b) return;
  if (set_size_[a] < set_size_[b]) std::swap(a, b);
  parent_[b] = a;
  set_size_[a] += set_size_[b];
}

void InteractionGraph::rebuild_components() {
  std::iota(parent_.begin(), parent_.end(), 0u);
  std::fill(set_size_.begin(), set_size_.end(), 1u);
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    for (const Neighbor& n : rows_[k]) {
      if (n.index > k && is_effective_phase(n.phase)) {
        unite(static_cast<std::uint32_t>(k), n.index);
      }
    }
  }
}

bool InteractionGraph::same_component(std::size_t i, std::size_t j) const {
  check_index(i);
  check_index(j);
  return root(static_cast<std::uint32_t>(i)) == root(static_cast<std::uint32_t>(j));
}

std::size_t InteractionGraph::component_size(std::size_t k) const {
  check_index(k);
  return set_size_[root(static_cast<std::uint32_t>(k))];
}

std::size_t InteractionGraph::component_id(std::size_t k) const {
  check_index(k);
  return root(static_cast<std::uint32_t>(k));
}

std::size_t InteractionGraph::largest_component_size() const {
  std::size_t best = 0;
  for (std::size_t k = 0; k < parent_.size(); ++k) {
    if (parent_[k] == k) best = std::max<std::size_t>(best, set_size_[k]);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Queries

bool is_entangled_partition(const InteractionGraph& g, const Partition& p) {
  if (p.n_particles() != g.size()) {
    throw PreconditionError("is_entangled_partition: partition built for a different N");
  }
  for (std::size_t k : p.members()) {
    for (const Neighbor& n : g.neighbors(k)) {
      if (!p.contains(n.index) && is_effective_phase(n.phase)) return true;
    }
  }
  return false;
}

bool path_exists(const InteractionGraph& g, std::size_t i, std::size_t j) {
  if (i == j) throw PreconditionError("path_exists: endpoints must differ");
  return g.same_component(i, j);
}

std::vector<std::vector<std::size_t>> connected_components(const InteractionGraph& g) {
  const std::size_t n = g.size();
  std::vector<std::size_t> cluster_of_root(n, n);
  std::vector<std::vector<std::size_t>> clusters;
  // Scanning k upwards makes each cluster's first member its smallest, which
  // fixes the ordering.
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t r = g.component_id(k);
    if (cluster_of_root[r] == n) {
      cluster_of_root[r] = clusters.size();
      clusters.emplace_back();
    }
    clusters[cluster_of_root[r]].push_back(k);
  }
  return clusters;
}

std::vector<std::vector<std::size_t>> connected_components_scan(const InteractionGraph& g) {
  const std::size_t n = g.size();
  std::vector<char> seen(n, 0);
  std::vector<std::vector<std::size_t>> clusters;
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < n; ++start) {
    if (seen[start]) continue;
    std::vector<std::size_t> cluster;
    seen[start] = 1;
    queue.push_back(start);
    while (!queue.empty()) {
      const std::size_t k = queue.front();
      queue.pop_front();
      cluster.push_back(k);
      for (const Neighbor& nb : g.neighbors(k)) {
        if (!seen[nb.index] && is_effective_phase(nb.phase)) {
          seen[nb.index] = 1;
          queue.push_back(nb.index);
        }
      }
    }
    std::sort(cluster.begin(), cluster.end());
    clusters.push_back(std::move(cluster));
  }
  return clusters;
}

std::vector<std::size_t> shortest_path(const InteractionGraph& g, std::size_t i,
                                       std::size_t j) {
  const std::size_t n = g.size();
  if (i >= n || j >= n) throw PreconditionError("shortest_path: index out of range");
  if (i == j) return {i};
  if (!g.same_component(i, j)) return {};
  std::vector<std::size_t> previous(n, n);
  previous[i] = i;
  std::deque<std::size_t> queue{i};
  while (!queue.empty()) {
    const std::size_t k = queue.front();
    queue.pop_front();
    if (k == j) break;
    for (const Neighbor& nb : g.neighbors(k)) {
      if (previous[nb.index] == n && is_effective_phase(nb.phase)) {
        previous[nb.index] = k;
        queue.push_back(nb.index);
      }
    }
  }
  std::vector<std::size_t> path;
  for (std::size_t k = j; k != i; k = previous[k]) path.push_back(k);
  path.push_back(i);
  std::reverse(path.begin(), path.end());
  return path;
}

int max_entangled_distance(const InteractionGraph& g, std::span<const Site> positions,
                           LatticeDims dims) {
  if (positions.size() != g.size()) {
    throw PreconditionError("max_entangled_distance: need one position per particle");
  }
  const int diameter = lattice_diameter(dims);
  int best = 0;
  for (const auto& cluster : connected_components(g)) {
    for (std::size_t a = 0; a < cluster.size(); ++a) {
      for (std::size_t b = a + 1; b < cluster.size(); ++b) {
        best = std::max(best,
                        lattice_distance(positions[cluster[a]], positions[cluster[b]], dims));
      }
      if (best == diameter) return best;
    }
  }
  return best;
}

}  // namespace spingas
