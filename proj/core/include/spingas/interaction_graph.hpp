#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "spingas/geometry.hpp"

namespace spingas {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Phases closer than this to a multiple of 2π count as "no interaction".
inline constexpr double kEdgeTolerance = 1e-12;

/// True when an accumulated phase acts as a non-trivial unitary, i.e. it is
/// not a multiple of 2π (within kEdgeTolerance).
bool is_effective_phase(double phase) noexcept;

struct Neighbor {
  std::uint32_t index;
  double phase;
};

/// A bipartition A|B of N particles. Only A is stored; B is the complement.
class Partition {
 public:
  Partition(std::vector<std::size_t> members, std::size_t n_particles);

  static Partition single(std::size_t k, std::size_t n_particles);

  std::span<const std::size_t> members() const noexcept { return members_; }
  std::vector<std::size_t> complement() const;

  bool contains(std::size_t k) const noexcept { return slot_[k] >= 0; }
  /// Position of particle k inside A, or -1 when k is in B.
  int slot(std::size_t k) const noexcept { return slot_[k]; }

  std::size_t size() const noexcept { return members_.size(); }
  std::size_t complement_size() const noexcept { return slot_.size() - members_.size(); }
  std::size_t n_particles() const noexcept { return slot_.size(); }

 private:
  std::vector<std::size_t> members_;
  std::vector<int> slot_;
};

/// Accumulated Ising phases Γ_kl of a spin gas.
///
/// Γ is symmetric with zero diagonal. Raw accumulated phases are stored
/// (never reduced mod 2π) so repeated collisions with the same partner add
/// coherently. Rows are sparse and sorted by neighbour index.
///
/// Connectivity is maintained incrementally with a union-find over edges
/// whose phase is effective (see is_effective_phase). If an edge stops being
/// effective the components are rebuilt from scratch, which only happens when
/// a phase lands exactly on a multiple of 2π.
class InteractionGraph {
 public:
  explicit InteractionGraph(std::size_t n_particles = 0);

  std::size_t size() const noexcept { return rows_.size(); }

  /// Γ_kl += delta and Γ_lk += delta.
  void add_phase(std::size_t k, std::size_t l, double delta);

  double phase(std::size_t k, std::size_t l) const;
  bool has_edge(std::size_t k, std::size_t l) const;

  /// Stored entries of row k, sorted by index. May contain entries whose
  /// phase is a multiple of 2π.
  std::span<const Neighbor> neighbors(std::size_t k) const { return rows_.at(k); }

  /// Number of stored unordered pairs.
  std::size_t stored_pairs() const noexcept { return stored_pairs_; }

  /// Calls fn(k, l, phase) once per stored pair with k < l, in row order.
  void for_each_pair(const std::function<void(std::size_t, std::size_t, double)>& fn) const;

  /// Union-find queries; O(log N) each.
  bool same_component(std::size_t i, std::size_t j) const;
  std::size_t component_size(std::size_t k) const;
  std::size_t largest_component_size() const;
  /// Representative particle of k's component; equal ids mean same component.
  std::size_t component_id(std::size_t k) const;

 private:
  void check_index(std::size_t k) const;
  Neighbor* find_entry(std::size_t k, std::size_t l);
  const Neighbor* find_entry(std::size_t k, std::size_t l) const;
  void insert_entry(std::size_t k, std::size_t l, double phase);

  std::uint32_t root(std::uint32_t k) const;
  void unite(std::uint32_t a, std::uint32_t b);
  void rebuild_components();

  std::vector<std::vector<Neighbor>> rows_;
  std::size_t stored_pairs_ = 0;
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> set_size_;
};

/// True iff some k∈A, l∈B share an effective edge. For pure states built
/// from |+⟩^⊗N this is exactly "ρ_A has rank > 1".
bool is_entangled_partition(const InteractionGraph& g, const Partition& p);

/// Reachability over effective edges. Requires i != j.
bool path_exists(const InteractionGraph& g, std::size_t i, std::size_t j);

/// Components over effective edges (union-find). Each cluster is sorted and
/// the list is ordered by smallest member.
std::vector<std::vector<std::size_t>> connected_components(const InteractionGraph& g);

/// Same result as connected_components, computed by a breadth-first scan of
/// the adjacency without the union-find. Kept as a cross-check.
std::vector<std::vector<std::size_t>> connected_components_scan(const InteractionGraph& g);

/// Breadth-first shortest path i → j over effective edges, endpoints
/// included. Empty if unreachable. Shortest paths never have chords.
std::vector<std::size_t> shortest_path(const InteractionGraph& g, std::size_t i,
                                       std::size_t j);

/// Largest lattice_distance between two particles of the same component;
/// 0 if every particle is isolated. `positions[k]` is the site of particle k.
int max_entangled_distance(const InteractionGraph& g, std::span<const Site> positions,
                           LatticeDims dims);

}  // namespace spingas
