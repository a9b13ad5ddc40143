#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spingas/ensemble.hpp"
#include "spingas/geometry.hpp"
#include "spingas/interaction_graph.hpp"
#include "spingas/random.hpp"

namespace spingas {

enum class ProbeMotion { hopping, dragged };
enum class ProbeRule {
  dwell,    ///< coupling·δt per step while sharing a site with a gas particle
  crossing  ///< fixed phase per occupied site entered
};
enum class Axis { x, y };

std::string to_string(ProbeMotion m);
std::string to_string(ProbeRule r);
std::string to_string(Axis a);
ProbeMotion probe_motion_from_string(const std::string& name);
ProbeRule probe_rule_from_string(const std::string& name);
Axis axis_from_string(const std::string& name);

/// Probe particles live on their own layer: they never block gas hops and
/// never interact with each other.
struct ProbeConfig {
  std::size_t count = 0;
  ProbeMotion motion = ProbeMotion::hopping;
  double hop_rate = 0.0;  ///< η_p, hopping motion only
  double speed = 0.0;     ///< sites per unit time, dragged motion only
  Axis axis = Axis::x;    ///< drag direction and default separation axis
  ProbeRule rule = ProbeRule::dwell;
  std::optional<double> coupling;  ///< dwell coupling; defaults to the gas coupling g_o
  double crossing_phase = 0.1;
  /// Probe k starts at origin + k·separation along `axis` unless explicit
  /// offsets are given.
  int separation = 0;
  std::vector<Site> offsets;
  std::optional<Site> origin;  ///< random site when unset
};

struct LatticeConfig {
  LatticeDims dims{20, 20};
  std::size_t particles = 0;  ///< N background particles
  double hop_rate = 1.0;      ///< η
  double coupling = 0.8;      ///< g_o, phase rate between nearest neighbours
  double dt = 0.1;            ///< δt
  bool background_coupling = true;
  ProbeConfig probes;

  double filling() const;
  std::size_t total_particles() const { return particles + probes.count; }
  /// Graph index of probe k.
  std::size_t probe_index(std::size_t k) const { return particles + k; }
  std::vector<Site> probe_offsets() const;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// Kinematic state. Gas particle k sits at positions[k]; occupancy holds
/// the particle index on each site or -1.
struct LatticeState {
  LatticeDims dims;
  std::vector<int> occupancy;
  std::vector<Site> positions;
  std::vector<Site> probe_origins;
  std::vector<Site> probe_positions;
  std::size_t steps = 0;
  std::vector<std::size_t> scratch;  ///< particle order buffer for hop selection

  double time(double dt) const { return static_cast<double>(steps) * dt; }
  /// True when occupancy and positions agree and no site is doubly occupied.
  bool consistent() const;
};

/// Gas particles on distinct uniformly random sites; probes at their origins.
LatticeState initialize_lattice(const LatticeConfig& cfg, Rng& rng);

/// Neighbour of `s` in direction 0..3 (+x, -x, +y, -y), wrapped.
Site neighbor_site(Site s, int direction, LatticeDims dims);

/// One δt step: K ~ Binomial(N, η δt) distinct gas particles each attempt a
/// hop to a random neighbour (rejected when occupied), probes move, then
/// phases accumulate: g_o δt for each nearest-neighbour gas pair and the
/// probe rule for each probe sharing a site with a gas particle.
void hop_step(LatticeState& state, const LatticeConfig& cfg, InteractionGraph& g, Rng& rng);

/// Rounds a time to whole steps; throws if it is negative or not within
/// 10⁻⁶ of a multiple of dt.
std::size_t steps_for_time(double t, double dt);

/// Runs one realization, calling observe(row, state, graph) at each grid
/// time (sorted ascending).
void run_lattice_realization(
    const LatticeConfig& cfg, const std::vector<double>& times, Rng& rng,
    const std::function<void(std::size_t, const LatticeState&, const InteractionGraph&)>&
        observe);

struct ClusterSeries {
  EnsembleSeries largest_cluster;  ///< N_C
  EnsembleSeries max_distance;     ///< ℓ_max
  double t0 = -1.0;       ///< mean first grid time with ≥ 95 % of gas particles connected
  double t0_std_error = 0.0;
  std::size_t t0_reached = 0;  ///< realizations that reached the threshold
};

inline constexpr double kPercolationFraction = 0.95;

ClusterSeries cluster_timeseries(const LatticeConfig& cfg, const std::vector<double>& times,
                                 const EnsembleOptions& options);

struct EntropySeries {
  EnsembleSeries von_neumann;
  EnsembleSeries renyi2;
};

/// Entropy of a block of gas particles drawn uniformly at random once per
/// realization.
EntropySeries block_entropy_timeseries(const LatticeConfig& cfg, std::size_t block_size,
                                       const std::vector<double>& times,
                                       const EnsembleOptions& options);

/// Entropy of all probes together with respect to everything else.
EntropySeries probe_entropy_timeseries(const LatticeConfig& cfg,
                                       const std::vector<double>& times,
                                       const EnsembleOptions& options);

}  // namespace spingas
