#include "spingas/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "spingas/entanglement.hpp"
#include "spingas/errors.hpp"

namespace spingas {

std::string to_string(ProbeMotion m) { return m == ProbeMotion::hopping ? "hopping" : "dragged"; }
std::string to_string(ProbeRule r) { return r == ProbeRule::dwell ? "dwell" : "crossing"; }
std::string to_string(Axis a) { return a == Axis::x ? "x" : "y"; }

ProbeMotion probe_motion_from_string(const std::string& name) {
  if (name == "hopping") return ProbeMotion::hopping;
  if (name == "dragged") return ProbeMotion::dragged;
  throw ConfigError("motion", "expected \"hopping\" or \"dragged\", got \"" + name + "\"");
}

ProbeRule probe_rule_from_string(const std::string& name) {
  if (name == "dwell") return ProbeRule::dwell;
  if (name == "crossing") return ProbeRule::crossing;
  throw ConfigError("rule", "expected \"dwell\" or \"crossing\", got \"" + name + "\"");
}

Axis axis_from_string(const std::string& name) {
  if (name == "x") return Axis::x;
  if (name == "y") return Axis::y;
  throw ConfigError("axis", "expected \"x\" or \"y\", got \"" + name + "\"");
}

double LatticeConfig::filling() const {
  return static_cast<double>(particles) / static_cast<double>(dims.site_count());
}

std::vector<Site> LatticeConfig::probe_offsets() const {
  if (!probes.offsets.empty()) return probes.offsets;
  std::vector<Site> out(probes.count);
  for (std::size_t k = 0; k < probes.count; ++k) {
    const int shift = static_cast<int>(k) * probes.separation;
    out[k] = probes.axis == Axis::x ? Site{shift, 0} : Site{0, shift};
  }
  return out;
}

void LatticeConfig::validate() const {
  if (dims.width < 1 || dims.height < 1) throw ConfigError("dims", "lattice sides must be >= 1");
  if (particles < 1) throw ConfigError("particles", "need at least one gas particle");
  if (particles > static_cast<std::size_t>(dims.site_count())) {
    throw ConfigError("particles", "filling exceeds one particle per site");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt", "must be positive");
  if (!(hop_rate >= 0.0) || hop_rate * dt > 0.5) {
    throw ConfigError("hop_rate", "need 0 <= hop_rate * dt <= 0.5");
  }
  if (!std::isfinite(coupling)) throw ConfigError("coupling", "must be finite");
  const ProbeConfig& p = probes;
  if (!(p.hop_rate >= 0.0) || p.hop_rate * dt > 0.5) {
    throw ConfigError("probes.hop_rate", "need 0 <= hop_rate * dt <= 0.5");
  }
  if (!(p.speed >= 0.0) || !std::isfinite(p.speed)) {
    throw ConfigError("probes.speed", "must be non-negative");
  }
  if (p.rule == ProbeRule::crossing && p.motion != ProbeMotion::dragged) {
    throw ConfigError("probes.rule", "crossing rule needs dragged probes");
  }
  if (!p.offsets.empty() && p.offsets.size() != p.count) {
    throw ConfigError("probes.offsets", "need one offset per probe");
  }
  if (p.coupling && !std::isfinite(*p.coupling)) {
    throw ConfigError("probes.coupling", "must be finite");
  }
  if (!std::isfinite(p.crossing_phase)) {
    throw ConfigError("probes.crossing_phase", "must be finite");
  }
}

bool LatticeState::consistent() const {
  if (static_cast<int>(occupancy.size()) != dims.site_count()) return false;
  std::size_t occupied = 0;
  for (std::size_t site = 0; site < occupancy.size(); ++site) {
    const int k = occupancy[site];
    if (k < 0) continue;
    ++occupied;
    if (static_cast<std::size_t>(k) >= positions.size()) return false;
    if (dims.index(positions[k]) != static_cast<int>(site)) return false;
  }
  return occupied == positions.size();
}

Site neighbor_site(Site s, int direction, LatticeDims dims) {
  static constexpr int dx[] = {1, -1, 0, 0};
  static constexpr int dy[] = {0, 0, 1, -1};
  return dims.wrap({s.x + dx[direction], s.y + dy[direction]});
}

LatticeState initialize_lattice(const LatticeConfig& cfg, Rng& rng) {
  cfg.validate();
  LatticeState state;
  state.dims = cfg.dims;
  const int sites = cfg.dims.site_count();
  state.occupancy.assign(sites, -1);

  // Partial Fisher-Yates over sites.
  std::vector<int> order(sites);
  for (int i = 0; i < sites; ++i) order[i] = i;
  state.positions.resize(cfg.particles);
  for (std::size_t k = 0; k < cfg.particles; ++k) {
    const auto j = k + static_cast<std::size_t>(rng() % (sites - k));
    std::swap(order[k], order[j]);
    state.positions[k] = cfg.dims.site(order[k]);
    state.occupancy[order[k]] = static_cast<int>(k);
  }
  state.scratch.resize(cfg.particles);
  for (std::size_t k = 0; k < cfg.particles; ++k) state.scratch[k] = k;

  const Site origin = cfg.probes.origin
                          ? cfg.dims.wrap(*cfg.probes.origin)
                          : cfg.dims.site(static_cast<int>(rng() % static_cast<unsigned>(sites)));
  for (const Site& offset : cfg.probe_offsets()) {
    state.probe_origins.push_back(cfg.dims.wrap({origin.x + offset.x, origin.y + offset.y}));
  }
  state.probe_positions = state.probe_origins;
  return state;
}

namespace {

Site advance(Site s, Axis axis, long long shift, LatticeDims dims) {
  const long long w = dims.width;
  const long long h = dims.height;
  if (axis == Axis::x) {
    s.x = static_cast<int>(((s.x + shift) % w + w) % w);
  } else {
    s.y = static_cast<int>(((s.y + shift) % h + h) % h);
  }
  return s;
}

long long drag_distance(double speed, std::size_t steps, double dt) {
  return static_cast<long long>(std::floor(speed * static_cast<double>(steps) * dt + 1e-9));
}

void add_nearest_neighbor_phases(const LatticeState& state, double phase, InteractionGraph& g) {
  const LatticeDims dims = state.dims;
  // Each unordered pair once: look right (+x) and up (+y). On a side of
  // length 2 both directions reach the same site, so only one end looks.
  for (std::size_t k = 0; k < state.positions.size(); ++k) {
    const Site s = state.positions[k];
    for (int dir : {0, 2}) {
      const int side = dir == 0 ? dims.width : dims.height;
      const int coord = dir == 0 ? s.x : s.y;
      if (side < 2 || (side == 2 && coord != 0)) continue;
      const int other = state.occupancy[dims.index(neighbor_site(s, dir, dims))];
      if (other >= 0) g.add_phase(k, static_cast<std::size_t>(other), phase);
    }
  }
}

}  // namespace

void hop_step(LatticeState& state, const LatticeConfig& cfg, InteractionGraph& g, Rng& rng) {
  const LatticeDims dims = cfg.dims;
  const std::size_t n = cfg.particles;

  // Gas hops: K distinct movers, in random order.
  if (cfg.hop_rate > 0.0) {
    std::binomial_distribution<std::size_t> movers(n, cfg.hop_rate * cfg.dt);
    const std::size_t k_move = movers(rng);
    // Any permutation works as the starting order for a partial shuffle.
    auto& order = state.scratch;
    for (std::size_t i = 0; i < k_move; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
      std::swap(order[i], order[j]);
      const std::size_t k = order[i];
      const Site from = state.positions[k];
      const Site to = neighbor_site(from, static_cast<int>(rng() % 4), dims);
      int& target = state.occupancy[dims.index(to)];
      if (target >= 0) continue;
      target = static_cast<int>(k);
      state.occupancy[dims.index(from)] = -1;
      state.positions[k] = to;
    }
  }

  // Probes.
  const ProbeConfig& probes = cfg.probes;
  std::vector<std::vector<Site>> crossed(probes.count);
  for (std::size_t p = 0; p < probes.count; ++p) {
    Site& pos = state.probe_positions[p];
    if (probes.motion == ProbeMotion::hopping) {
      if (probes.hop_rate > 0.0 && rng.uniform() < probes.hop_rate * cfg.dt) {
        pos = neighbor_site(pos, static_cast<int>(rng() % 4), dims);
      }
    } else {
      const long long before = drag_distance(probes.speed, state.steps, cfg.dt);
      const long long after = drag_distance(probes.speed, state.steps + 1, cfg.dt);
      for (long long d = before + 1; d <= after; ++d) {
        crossed[p].push_back(advance(state.probe_origins[p], probes.axis, d, dims));
      }
      pos = advance(state.probe_origins[p], probes.axis, after, dims);
    }
  }
  ++state.steps;

  // Phases.
  if (cfg.background_coupling && cfg.coupling != 0.0) {
    add_nearest_neighbor_phases(state, cfg.coupling * cfg.dt, g);
  }
  for (std::size_t p = 0; p < probes.count; ++p) {
    const std::size_t probe = cfg.probe_index(p);
    if (probes.rule == ProbeRule::dwell) {
      const double phase = probes.coupling.value_or(cfg.coupling) * cfg.dt;
      const int occupant = state.occupancy[dims.index(state.probe_positions[p])];
      if (occupant >= 0 && phase != 0.0) g.add_phase(probe, static_cast<std::size_t>(occupant), phase);
    } else {
      for (const Site& s : crossed[p]) {
        const int occupant = state.occupancy[dims.index(s)];
        if (occupant >= 0) {
          g.add_phase(probe, static_cast<std::size_t>(occupant), probes.crossing_phase);
        }
      }
    }
  }
}

std::size_t steps_for_time(double t, double dt) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw PreconditionError("time grid: negative time");
  const double steps = std::round(t / dt);
  if (std::abs(steps * dt - t) > 1e-6 * std::max(1.0, t)) {
    throw PreconditionError("time grid: t = " + std::to_string(t) +
                            " is not a multiple of dt = " + std::to_string(dt));
  }
  return static_cast<std::size_t>(steps);
}

void run_lattice_realization(
    const LatticeConfig& cfg, const std::vector<double>& times, Rng& rng,
    const std::function<void(std::size_t, const LatticeState&, const InteractionGraph&)>&
        observe) {
  LatticeState state = initialize_lattice(cfg, rng);
  InteractionGraph g(cfg.total_particles());
  for (std::size_t row = 0; row < times.size(); ++row) {
    const std::size_t target = steps_for_time(times[row], cfg.dt);
    if (target < state.steps) throw PreconditionError("time grid must be sorted ascending");
    while (state.steps < target) hop_step(state, cfg, g, rng);
    observe(row, state, g);
  }
}

ClusterSeries cluster_timeseries(const LatticeConfig& cfg, const std::vector<double>& times,
                                 const EnsembleOptions& options) {
  struct Run {
    std::vector<double> largest;
    std::vector<double> distance;
    double t0 = -1.0;
  };
  const auto runs = map_realizations<Run>(options.ensemble, options.workers, [&](std::size_t i) {
    Rng rng(options.seed, i);
    Run run;
    run.largest.resize(times.size());
    run.distance.resize(times.size());
    const auto threshold = kPercolationFraction * static_cast<double>(cfg.particles);
    run_lattice_realization(cfg, times, rng,
                            [&](std::size_t row, const LatticeState& s, const InteractionGraph& g) {
                              std::size_t largest = 0;
                              for (std::size_t k = 0; k < cfg.particles; ++k) {
                                largest = std::max(largest, g.component_size(k));
                              }
                              run.largest[row] = static_cast<double>(largest);
                              std::vector<Site> where = s.positions;
                              where.insert(where.end(), s.probe_positions.begin(),
                                           s.probe_positions.end());
                              run.distance[row] = max_entangled_distance(g, where, cfg.dims);
                              if (run.t0 < 0.0 && static_cast<double>(largest) >= threshold) {
                                run.t0 = times[row];
                              }
                            });
    return run;
  });

  SeriesAccumulator largest(times);
  SeriesAccumulator distance(times);
  std::vector<double> t0;
  for (const Run& run : runs) {
    for (std::size_t row = 0; row < times.size(); ++row) {
      largest.add(row, run.largest[row]);
      distance.add(row, run.distance[row]);
    }
    if (run.t0 >= 0.0) t0.push_back(run.t0);
  }
  ClusterSeries out{largest.finish("cluster_size"), distance.finish("max_distance"), -1.0, 0.0,
                    t0.size()};
  if (!t0.empty()) {
    const SeriesRow summary = summarize(t0);
    out.t0 = summary.mean;
    out.t0_std_error = summary.std_error;
  }
  return out;
}

namespace {

EntropySeries entropy_series(const LatticeConfig& cfg, const std::vector<double>& times,
                             const EnsembleOptions& options,
                             const std::function<std::vector<std::size_t>(Rng&)>& choose) {
  struct Run {
    std::vector<double> vn;
    std::vector<double> r2;
  };
  const auto runs = map_realizations<Run>(options.ensemble, options.workers, [&](std::size_t i) {
    Rng rng(options.seed, i);
    Run run;
    run.vn.resize(times.size());
    run.r2.resize(times.size());
    // The subset is drawn from a separate stream so it does not shift the
    // kinematics of realization i.
    Rng pick(options.seed ^ 0x5ca1ab1eULL, i);
    const Partition subset(choose(pick), cfg.total_particles());
    run_lattice_realization(cfg, times, rng,
                            [&](std::size_t row, const LatticeState&, const InteractionGraph& g) {
                              const BlockEntropy s = block_entropy(g, subset);
                              run.vn[row] = s.von_neumann;
                              run.r2[row] = s.renyi2;
                            });
    return run;
  });
  SeriesAccumulator vn(times);
  SeriesAccumulator r2(times);
  for (const Run& run : runs) {
    for (std::size_t row = 0; row < times.size(); ++row) {
      vn.add(row, run.vn[row]);
      r2.add(row, run.r2[row]);
    }
  }
  return {vn.finish("entropy"), r2.finish("renyi2")};
}

}  // namespace

EntropySeries block_entropy_timeseries(const LatticeConfig& cfg, std::size_t block_size,
                                       const std::vector<double>& times,
                                       const EnsembleOptions& options) {
  if (block_size == 0 || block_size > kDefaultSubsystemCap || block_size >= cfg.particles) {
    throw PreconditionError("block_entropy_timeseries: block size must lie in [1, 12] and "
                            "below the particle count");
  }
  EntropySeries out = entropy_series(cfg, times, options, [&](Rng& rng) {
    std::vector<std::size_t> order(cfg.particles);
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    for (std::size_t k = 0; k < block_size; ++k) {
      std::swap(order[k], order[k + static_cast<std::size_t>(rng() % (order.size() - k))]);
    }
    order.resize(block_size);
    return order;
  });
  out.von_neumann.observable = "block_entropy";
  out.renyi2.observable = "block_renyi2";
  return out;
}

EntropySeries probe_entropy_timeseries(const LatticeConfig& cfg,
                                       const std::vector<double>& times,
                                       const EnsembleOptions& options) {
  if (cfg.probes.count == 0 || cfg.probes.count > kDefaultSubsystemCap) {
    throw PreconditionError("probe_entropy_timeseries: need between 1 and 12 probes");
  }
  EntropySeries out = entropy_series(cfg, times, options, [&](Rng&) {
    std::vector<std::size_t> probes(cfg.probes.count);
    for (std::size_t k = 0; k < probes.size(); ++k) probes[k] = cfg.probe_index(k);
    return probes;
  });
  out.von_neumann.observable = "probe_entropy";
  out.renyi2.observable = "probe_renyi2";
  return out;
}

}  // namespace spingas
