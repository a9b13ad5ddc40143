#include "spingas/experiment.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>
#include <toml.hpp>

#include "spingas/entanglement.hpp"
#include "spingas/errors.hpp"

namespace spingas {

using nlohmann::json;

std::string library_version() { return "spingas 0.1.0"; }

namespace {

// ---------------------------------------------------------------------------
// Enum names

const char* model_name(Model m) { return m == Model::boltzmann ? "boltzmann" : "lattice"; }

const char* kind_name(ObservableKind k) {
  switch (k) {
    case ObservableKind::block_entropy:
      return "block_entropy";
    case ObservableKind::probe_entropy:
      return "probe_entropy";
    case ObservableKind::cluster_stats:
      return "cluster_stats";
    case ObservableKind::concurrence:
      return "concurrence";
    case ObservableKind::meyer_wallach:
      return "meyer_wallach";
    case ObservableKind::epsilon_stats:
      return "epsilon_stats";
    case ObservableKind::coherence_squared:
      return "coherence_squared";
  }
  return "unknown";
}

const char* selection_name(BlockSelection s) {
  switch (s) {
    case BlockSelection::first:
      return "first";
    case BlockSelection::random:
      return "random";
    case BlockSelection::sweep:
      return "sweep";
    case BlockSelection::explicit_:
      return "explicit";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// TOML → JSON so both formats share one reader

json toml_to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    json out = json::object();
    for (auto&& [key, value] : *t) out[std::string(key.str())] = toml_to_json(value);
    return out;
  }
  if (const auto* a = node.as_array()) {
    json out = json::array();
    for (const toml::node& value : *a) out.push_back(toml_to_json(value));
    return out;
  }
  if (const auto* v = node.as_integer()) return v->get();
  if (const auto* v = node.as_floating_point()) return v->get();
  if (const auto* v = node.as_boolean()) return v->get();
  if (const auto* v = node.as_string()) return v->get();
  throw ConfigError("", "unsupported TOML value (dates and times are not accepted)");
}

/// Typed access to one JSON object with dotted field paths in errors and
/// rejection of unknown keys.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_, "expected a table");
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const {
    seen_.insert(key);
    return obj_.contains(key);
  }

  const json& raw(const std::string& key) const {
    seen_.insert(key);
    return obj_.at(key);
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    return v.get<double>();
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
    return v.get<std::int64_t>();
  }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    const std::int64_t v = integer(key, static_cast<std::int64_t>(fallback));
    if (v < 0) throw ConfigError(field(key), "must be non-negative");
    return static_cast<std::size_t>(v);
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    return v.get<std::string>();
  }

  template <class T>
  std::vector<T> list(const std::string& key, std::vector<T> fallback) const {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_array()) throw ConfigError(field(key), "expected an array");
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const json& e = v[i];
      const std::string where = field(key) + "[" + std::to_string(i) + "]";
      if constexpr (std::is_same_v<T, std::string>) {
        if (!e.is_string()) throw ConfigError(where, "expected a string");
      } else if constexpr (std::is_integral_v<T>) {
        if (!e.is_number_integer()) throw ConfigError(where, "expected an integer");
        if (std::is_unsigned_v<T> && e.get<std::int64_t>() < 0) {
          throw ConfigError(where, "must be non-negative");
        }
      } else {
        if (!e.is_number()) throw ConfigError(where, "expected a number");
      }
      out.push_back(e.get<T>());
    }
    return out;
  }

  /// Rethrows enum parse errors with the full path.
  template <class Fn>
  auto choice(const std::string& key, const std::string& fallback, Fn&& parse) const {
    const std::string name = text(key, fallback);
    try {
      return parse(name);
    } catch (const ConfigError& e) {
      throw ConfigError(field(key), e.message());
    }
  }

  void reject_unknown() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown field");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

Site read_site(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
    throw ConfigError(where, "expected [x, y]");
  }
  return {v[0].get<int>(), v[1].get<int>()};
}

BoltzmannConfig read_boltzmann(const json& obj) {
  const Reader r(obj, "boltzmann");
  BoltzmannConfig c;
  c.density = r.number("density", c.density);
  c.temperature = r.number("temperature", c.temperature);
  c.mass = r.number("mass", c.mass);
  c.diameter = r.number("diameter", c.diameter);
  c.coupling = r.number("coupling", c.coupling);
  c.particles = r.count("particles", c.particles);
  c.boltzmann_constant = r.number("boltzmann_constant", c.boltzmann_constant);
  c.phase_mode = r.choice("phase_mode", "exact", phase_mode_from_string);
  r.reject_unknown();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(r.field(e.field()), e.message());
  }
  return c;
}

ProbeConfig read_probes(const json& obj) {
  const Reader r(obj, "lattice.probes");
  ProbeConfig p;
  p.count = r.count("count", 0);
  p.motion = r.choice("motion", "hopping", probe_motion_from_string);
  p.hop_rate = r.number("hop_rate", 0.0);
  p.speed = r.number("speed", 0.0);
  p.axis = r.choice("axis", "x", axis_from_string);
  p.rule = r.choice("rule", "dwell", probe_rule_from_string);
  if (r.has("coupling")) p.coupling = r.number("coupling", 0.0);
  p.crossing_phase = r.number("crossing_phase", p.crossing_phase);
  p.separation = static_cast<int>(r.integer("separation", 0));
  if (r.has("offsets")) {
    const json& list = r.raw("offsets");
    if (!list.is_array()) throw ConfigError(r.field("offsets"), "expected an array of [x, y]");
    for (std::size_t i = 0; i < list.size(); ++i) {
      p.offsets.push_back(read_site(list[i], r.field("offsets") + "[" + std::to_string(i) + "]"));
    }
  }
  if (r.has("origin")) p.origin = read_site(r.raw("origin"), r.field("origin"));
  r.reject_unknown();
  return p;
}

LatticeConfig read_lattice(const json& obj) {
  const Reader r(obj, "lattice");
  LatticeConfig c;
  if (r.has("size")) {
    const auto m = static_cast<int>(r.integer("size", 0));
    c.dims = {m, m};
  }
  c.dims.width = static_cast<int>(r.integer("width", c.dims.width));
  c.dims.height = static_cast<int>(r.integer("height", c.dims.height));
  if (c.dims.width < 1 || c.dims.height < 1) {
    throw ConfigError(r.field("width"), "lattice sides must be >= 1");
  }
  if (r.has("particles") && r.has("filling")) {
    throw ConfigError(r.field("filling"), "give either particles or filling, not both");
  }
  if (r.has("filling")) {
    const double nu = r.number("filling", 0.0);
    if (!(nu > 0.0 && nu <= 1.0)) throw ConfigError(r.field("filling"), "must lie in (0, 1]");
    c.particles = static_cast<std::size_t>(std::llround(nu * c.dims.site_count()));
  } else {
    c.particles = r.count("particles", 0);
  }
  c.hop_rate = r.number("hop_rate", c.hop_rate);
  c.coupling = r.number("coupling", c.coupling);
  c.dt = r.number("dt", c.dt);
  c.background_coupling = r.boolean("background_coupling", true);
  if (r.has("probes")) c.probes = read_probes(r.raw("probes"));
  r.reject_unknown();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(r.field(e.field()), e.message());
  }
  return c;
}

std::vector<double> read_times(const json& v) {
  if (v.is_array()) {
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError("times[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }
  const Reader r(v, "times");
  const double start = r.number("start", 0.0);
  const double stop = r.number("stop", 0.0);
  const double step = r.number("step", 1.0);
  r.reject_unknown();
  if (!(step > 0.0)) throw ConfigError("times.step", "must be positive");
  if (stop < start) throw ConfigError("times.stop", "must not precede start");
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
  std::vector<double> out;
  for (std::size_t i = 0; i <= n; ++i) out.push_back(start + static_cast<double>(i) * step);
  return out;
}

ObservableKind kind_from_string(const std::string& name) {
  for (auto k : {ObservableKind::block_entropy, ObservableKind::probe_entropy,
                 ObservableKind::cluster_stats, ObservableKind::concurrence,
                 ObservableKind::meyer_wallach, ObservableKind::epsilon_stats,
                 ObservableKind::coherence_squared}) {
    if (name == kind_name(k)) return k;
  }
  throw ConfigError("kind", "unknown observable \"" + name + "\"");
}

BlockSelection selection_from_string(const std::string& name) {
  for (auto s : {BlockSelection::first, BlockSelection::random, BlockSelection::sweep,
                 BlockSelection::explicit_}) {
    if (name == selection_name(s)) return s;
  }
  throw ConfigError("selection", "expected first, random, sweep or explicit");
}

ObservableSpec read_observable(const json& obj, std::size_t index) {
  const Reader r(obj, "observables[" + std::to_string(index) + "]");
  ObservableSpec o;
  if (!r.has("kind")) throw ConfigError(r.field("kind"), "missing");
  o.kind = r.choice("kind", "", kind_from_string);
  switch (o.kind) {
    case ObservableKind::block_entropy:
      o.members = r.list<std::size_t>("members", {});
      o.selection = r.choice("selection", o.members.empty() ? "random" : "explicit",
                             selection_from_string);
      o.size = r.count("size", o.members.empty() ? 1 : o.members.size());
      if (o.selection == BlockSelection::explicit_ && o.members.size() != o.size) {
        throw ConfigError(r.field("members"), "explicit selection needs `size` members");
      }
      if (o.size == 0 || o.size > kDefaultSubsystemCap) {
        throw ConfigError(r.field("size"), "must lie in [1, 12]");
      }
      break;
    case ObservableKind::concurrence: {
      const auto names = r.list<std::string>("states", {"psi_plus", "phi_plus", "cluster"});
      o.states.clear();
      for (std::size_t i = 0; i < names.size(); ++i) {
        try {
          o.states.push_back(probe_state_from_string(names[i]));
        } catch (const ConfigError& e) {
          throw ConfigError(r.field("states") + "[" + std::to_string(i) + "]", e.message());
        }
      }
      const std::string schedule = r.text("schedule", "time");
      if (schedule == "time") {
        o.schedule = ConcurrenceSchedule::time;
      } else if (schedule == "distance") {
        o.schedule = ConcurrenceSchedule::distance;
        o.distances = r.list<int>("distances", {});
        o.t_o = r.number("t_o", 0.0);
        if (o.distances.empty()) throw ConfigError(r.field("distances"), "must not be empty");
        for (int d : o.distances) {
          if (d < 0) throw ConfigError(r.field("distances"), "must be non-negative");
        }
        if (!(o.t_o >= 0.0)) throw ConfigError(r.field("t_o"), "must be non-negative");
      } else {
        throw ConfigError(r.field("schedule"), "expected \"time\" or \"distance\"");
      }
      break;
    }
    case ObservableKind::epsilon_stats:
      o.z = r.list<int>("z", {1, 1});
      o.samples = r.count("samples", 1000);
      for (int v : o.z) {
        if (v < -1 || v > 1) throw ConfigError(r.field("z"), "entries must be -1, 0 or 1");
      }
      if (o.z.empty() || o.z.size() > kDefaultSubsystemCap) {
        throw ConfigError(r.field("z"), "length must lie in [1, 12]");
      }
      if (o.samples < 1000) throw ConfigError(r.field("samples"), "need at least 1000");
      break;
    default:
      break;
  }
  r.reject_unknown();
  return o;
}

ExperimentSpec read_spec(const json& doc) {
  const Reader r(doc, "");
  ExperimentSpec spec;
  spec.name = r.text("name", spec.name);
  if (spec.name.empty() || spec.name.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("name", "must be a non-empty file stem");
  }
  const std::string model = r.text("model", "");
  if (model == "boltzmann") {
    spec.model = Model::boltzmann;
  } else if (model == "lattice") {
    spec.model = Model::lattice;
  } else {
    throw ConfigError("model", "expected \"boltzmann\" or \"lattice\"");
  }
  spec.seed = static_cast<std::uint64_t>(r.integer("seed", 0));
  spec.ensemble = r.count("ensemble", 1);
  spec.workers = r.count("workers", 1);
  spec.output = r.text("output", ".");
  if (!r.has("times")) throw ConfigError("times", "missing");
  spec.times = read_times(r.raw("times"));

  const char* model_key = model_name(spec.model);
  if (!r.has(model_key)) throw ConfigError(model_key, "missing model table");
  if (spec.model == Model::boltzmann) {
    spec.boltzmann = read_boltzmann(r.raw("boltzmann"));
  } else {
    spec.lattice = read_lattice(r.raw("lattice"));
  }
  if (!r.has("observables") || !r.raw("observables").is_array()) {
    throw ConfigError("observables", "expected an array of tables");
  }
  const json& list = r.raw("observables");
  for (std::size_t i = 0; i < list.size(); ++i) spec.observables.push_back(read_observable(list[i], i));
  r.reject_unknown();
  spec.validate();
  return spec;
}

json site_json(Site s) { return json::array({s.x, s.y}); }

json spec_physics_json(const ExperimentSpec& spec) {
  json doc;
  doc["name"] = spec.name;
  doc["model"] = model_name(spec.model);
  doc["times"] = spec.times;
  if (spec.model == Model::boltzmann) {
    const BoltzmannConfig& b = spec.boltzmann;
    doc["boltzmann"] = {{"density", b.density},
                        {"temperature", b.temperature},
                        {"mass", b.mass},
                        {"diameter", b.diameter},
                        {"coupling", b.coupling},
                        {"particles", b.particles},
                        {"boltzmann_constant", b.boltzmann_constant},
                        {"phase_mode", to_string(b.phase_mode)}};
  } else {
    const LatticeConfig& l = spec.lattice;
    json probes = {{"count", l.probes.count},
                   {"motion", to_string(l.probes.motion)},
                   {"hop_rate", l.probes.hop_rate},
                   {"speed", l.probes.speed},
                   {"axis", to_string(l.probes.axis)},
                   {"rule", to_string(l.probes.rule)},
                   {"crossing_phase", l.probes.crossing_phase},
                   {"separation", l.probes.separation}};
    if (l.probes.coupling) probes["coupling"] = *l.probes.coupling;
    if (!l.probes.offsets.empty()) {
      probes["offsets"] = json::array();
      for (const Site& s : l.probes.offsets) probes["offsets"].push_back(site_json(s));
    }
    if (l.probes.origin) probes["origin"] = site_json(*l.probes.origin);
    doc["lattice"] = {{"width", l.dims.width},
                      {"height", l.dims.height},
                      {"particles", l.particles},
                      {"hop_rate", l.hop_rate},
                      {"coupling", l.coupling},
                      {"dt", l.dt},
                      {"background_coupling", l.background_coupling},
                      {"probes", probes}};
  }
  json obs = json::array();
  for (const ObservableSpec& o : spec.observables) {
    json e = {{"kind", kind_name(o.kind)}};
    if (o.kind == ObservableKind::block_entropy) {
      e["size"] = o.size;
      e["selection"] = selection_name(o.selection);
      if (o.selection == BlockSelection::explicit_) e["members"] = o.members;
    } else if (o.kind == ObservableKind::concurrence) {
      e["states"] = json::array();
      for (ProbeState s : o.states) e["states"].push_back(to_string(s));
      e["schedule"] = o.schedule == ConcurrenceSchedule::time ? "time" : "distance";
      if (o.schedule == ConcurrenceSchedule::distance) {
        e["distances"] = o.distances;
        e["t_o"] = o.t_o;
      }
    } else if (o.kind == ObservableKind::epsilon_stats) {
      e["z"] = o.z;
      e["samples"] = o.samples;
    }
    obs.push_back(e);
  }
  doc["observables"] = obs;
  return doc;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Spec

std::string ExperimentSpec::canonical_json() const { return spec_physics_json(*this).dump(); }

std::string ExperimentSpec::params_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_json()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

void ExperimentSpec::validate() const {
  if (ensemble < 1) throw ConfigError("ensemble", "must be at least 1");
  if (times.empty()) throw ConfigError("times", "grid is empty");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0) || (i > 0 && times[i] < times[i - 1])) {
      throw ConfigError("times", "must be non-negative and ascending");
    }
  }
  if (observables.empty()) throw ConfigError("observables", "nothing to measure");
  if (model == Model::boltzmann) {
    boltzmann.validate();
  } else {
    lattice.validate();
    for (double t : times) {
      try {
        steps_for_time(t, lattice.dt);
      } catch (const PreconditionError& e) {
        throw ConfigError("times", e.what());
      }
    }
  }
  const std::size_t gas = model == Model::boltzmann ? boltzmann.particles : lattice.particles;
  for (std::size_t i = 0; i < observables.size(); ++i) {
    const ObservableSpec& o = observables[i];
    const std::string where = "observables[" + std::to_string(i) + "]";
    auto lattice_only = [&]() {
      if (model != Model::lattice) {
        throw ConfigError(where + ".kind",
                          std::string(kind_name(o.kind)) + " needs the lattice model");
      }
    };
    switch (o.kind) {
      case ObservableKind::block_entropy:
        if (o.size >= gas) throw ConfigError(where + ".size", "block must leave particles outside");
        for (std::size_t m : o.members) {
          if (m >= gas) throw ConfigError(where + ".members", "index beyond the gas particles");
        }
        break;
      case ObservableKind::probe_entropy:
        lattice_only();
        if (lattice.probes.count == 0) throw ConfigError(where, "lattice has no probes");
        break;
      case ObservableKind::cluster_stats:
        lattice_only();
        break;
      case ObservableKind::concurrence:
        lattice_only();
        if (o.schedule == ConcurrenceSchedule::time && lattice.probes.count < 2) {
          throw ConfigError(where, "needs two probes");
        }
        if (o.schedule == ConcurrenceSchedule::distance) {
          try {
            steps_for_time(o.t_o, lattice.dt);
          } catch (const PreconditionError& e) {
            throw ConfigError(where + ".t_o", e.what());
          }
        }
        break;
      case ObservableKind::epsilon_stats:
        if (model == Model::lattice && lattice.probes.count != o.z.size()) {
          throw ConfigError(where + ".z", "length must equal the probe count");
        }
        if (model == Model::boltzmann && o.z.size() >= gas) {
          throw ConfigError(where + ".z", "subsystem must leave particles outside");
        }
        break;
      case ObservableKind::coherence_squared:
      case ObservableKind::meyer_wallach:
        break;
    }
  }
}

ExperimentSpec parse_experiment(const std::string& text, bool toml_format) {
  json doc;
  if (toml_format) {
    try {
      doc = toml_to_json(toml::parse(text));
    } catch (const toml::parse_error& e) {
      std::ostringstream msg;
      msg << "invalid TOML at line " << e.source().begin.line << ": " << e.description();
      throw ConfigError("", msg.str());
    }
  } else {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError("", std::string("invalid JSON: ") + e.what());
    }
  }
  return read_spec(doc);
}

ExperimentSpec load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string ext = path.extension().string();
  if (ext != ".toml" && ext != ".json") {
    throw ConfigError("", "config must end in .toml or .json: " + path.string());
  }
  return parse_experiment(buffer.str(), ext == ".toml");
}

// ---------------------------------------------------------------------------
// Run

namespace {

/// Per-realization block choice, drawn from a stream separate from the
/// dynamics so adding observables never changes the kinematics.
std::vector<std::vector<std::size_t>> choose_blocks(const ObservableSpec& o, std::size_t gas,
                                                    Rng& pick) {
  std::vector<std::vector<std::size_t>> blocks;
  switch (o.selection) {
    case BlockSelection::first: {
      std::vector<std::size_t> b(o.size);
      for (std::size_t k = 0; k < o.size; ++k) b[k] = k;
      blocks.push_back(std::move(b));
      break;
    }
    case BlockSelection::explicit_:
      blocks.push_back(o.members);
      break;
    case BlockSelection::random: {
      std::vector<std::size_t> order(gas);
      for (std::size_t k = 0; k < gas; ++k) order[k] = k;
      for (std::size_t k = 0; k < o.size; ++k) {
        std::swap(order[k], order[k + static_cast<std::size_t>(pick() % (gas - k))]);
      }
      order.resize(o.size);
      blocks.push_back(std::move(order));
      break;
    }
    case BlockSelection::sweep:
      for (std::size_t start = 0; start + o.size <= gas; start += o.size) {
        std::vector<std::size_t> b(o.size);
        for (std::size_t k = 0; k < o.size; ++k) b[k] = start + k;
        blocks.push_back(std::move(b));
      }
      break;
  }
  return blocks;
}

struct Plan {
  std::vector<std::string> columns;  ///< realization-averaged series
  std::vector<std::size_t> first_column;  ///< per observable
  std::vector<std::size_t> channel_slot;  ///< per observable; npos if none
  std::size_t channel_slots = 0;
};

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

std::string size_tag(const ObservableSpec& o) {
  return "[size=" + std::to_string(o.size) + "," + selection_name(o.selection) + "]";
}

Plan make_plan(const ExperimentSpec& spec) {
  Plan plan;
  for (const ObservableSpec& o : spec.observables) {
    plan.first_column.push_back(plan.columns.size());
    plan.channel_slot.push_back(kNone);
    switch (o.kind) {
      case ObservableKind::block_entropy:
        plan.columns.push_back("block_entropy" + size_tag(o));
        plan.columns.push_back("block_renyi2" + size_tag(o));
        break;
      case ObservableKind::probe_entropy:
        plan.columns.push_back("probe_entropy");
        plan.columns.push_back("probe_renyi2");
        break;
      case ObservableKind::cluster_stats:
        plan.columns.push_back("cluster_size");
        plan.columns.push_back("max_distance");
        break;
      case ObservableKind::concurrence:
        if (o.schedule == ConcurrenceSchedule::time) plan.channel_slot.back() = plan.channel_slots++;
        break;
      case ObservableKind::meyer_wallach:
        plan.columns.push_back("meyer_wallach");
        break;
      case ObservableKind::epsilon_stats:
        plan.columns.push_back("epsilon_mean");
        plan.columns.push_back("epsilon_sigma");
        break;
      case ObservableKind::coherence_squared:
        plan.columns.push_back("coherence_squared");
        break;
    }
  }
  return plan;
}

struct Realization {
  std::vector<double> values;  ///< [column][row]
  std::vector<std::vector<ProbeChannel>> channels;  ///< [slot], one per row
  double t0 = -1.0;
};

constexpr std::uint64_t kPickSalt = 0x5ca1ab1eULL;
constexpr std::uint64_t kEpsilonSalt = 0xe951104ULL;

Realization run_realization(const ExperimentSpec& spec, const Plan& plan, std::size_t index) {
  const std::size_t rows = spec.times.size();
  const bool lattice = spec.model == Model::lattice;
  const std::size_t gas = lattice ? spec.lattice.particles : spec.boltzmann.particles;
  const std::size_t total = lattice ? spec.lattice.total_particles() : gas;

  Realization out;
  out.values.assign(plan.columns.size() * rows, 0.0);
  out.channels.assign(plan.channel_slots, {});

  Rng pick(spec.seed ^ kPickSalt, index);
  Rng eps_rng(spec.seed ^ kEpsilonSalt, index);
  std::vector<std::vector<std::vector<std::size_t>>> blocks(spec.observables.size());
  for (std::size_t i = 0; i < spec.observables.size(); ++i) {
    if (spec.observables[i].kind == ObservableKind::block_entropy) {
      blocks[i] = choose_blocks(spec.observables[i], gas, pick);
    }
  }
  std::optional<Partition> probes;
  if (lattice && spec.lattice.probes.count > 0) {
    std::vector<std::size_t> members(spec.lattice.probes.count);
    for (std::size_t k = 0; k < members.size(); ++k) members[k] = spec.lattice.probe_index(k);
    probes.emplace(std::move(members), total);
  }

  auto set = [&](std::size_t column, std::size_t row, double v) {
    out.values[column * rows + row] = v;
  };

  auto observe = [&](std::size_t row, const LatticeState* state, const InteractionGraph& g) {
    for (std::size_t i = 0; i < spec.observables.size(); ++i) {
      const ObservableSpec& o = spec.observables[i];
      const std::size_t col = plan.first_column[i];
      switch (o.kind) {
        case ObservableKind::block_entropy: {
          double vn = 0.0;
          double r2 = 0.0;
          for (const auto& b : blocks[i]) {
            const BlockEntropy s = block_entropy(g, Partition(b, total));
            vn += s.von_neumann;
            r2 += s.renyi2;
          }
          const double n = static_cast<double>(blocks[i].size());
          set(col, row, vn / n);
          set(col + 1, row, r2 / n);
          break;
        }
        case ObservableKind::probe_entropy: {
          const BlockEntropy s = block_entropy(g, *probes);
          set(col, row, s.von_neumann);
          set(col + 1, row, s.renyi2);
          break;
        }
        case ObservableKind::cluster_stats: {
          std::size_t largest = 0;
          for (std::size_t k = 0; k < gas; ++k) largest = std::max(largest, g.component_size(k));
          set(col, row, static_cast<double>(largest));
          std::vector<Site> where = state->positions;
          where.insert(where.end(), state->probe_positions.begin(), state->probe_positions.end());
          set(col + 1, row, max_entangled_distance(g, where, spec.lattice.dims));
          if (out.t0 < 0.0 &&
              static_cast<double>(largest) >= kPercolationFraction * static_cast<double>(gas)) {
            out.t0 = spec.times[row];
          }
          break;
        }
        case ObservableKind::concurrence:
          if (plan.channel_slot[i] != kNone) {
            const Partition pair({spec.lattice.probe_index(0), spec.lattice.probe_index(1)}, total);
            out.channels[plan.channel_slot[i]].push_back(
                ProbeChannel::from_graph(g, pair, spec.times[row], index));
          }
          break;
        case ObservableKind::meyer_wallach:
          set(col, row, meyer_wallach(g));
          break;
        case ObservableKind::epsilon_stats: {
          std::vector<std::size_t> members(o.z.size());
          for (std::size_t k = 0; k < members.size(); ++k) {
            members[k] = lattice ? spec.lattice.probe_index(k) : k;
          }
          const EpsilonStats e =
              epsilon_distribution(g, Partition(members, total), o.z, o.samples, eps_rng);
          set(col, row, e.mean);
          set(col + 1, row, e.sigma);
          break;
        }
        case ObservableKind::coherence_squared: {
          double sum = 0.0;
          const int z[] = {1};
          for (std::size_t k = 0; k < gas; ++k) {
            const double c = CouplingBlock(g, Partition::single(k, total)).coherence(z).magnitude();
            sum += c * c;
          }
          set(col, row, sum / static_cast<double>(gas));
          break;
        }
      }
    }
  };

  Rng rng(spec.seed, index);
  if (lattice) {
    run_lattice_realization(spec.lattice, spec.times, rng,
                            [&](std::size_t row, const LatticeState& s, const InteractionGraph& g) {
                              observe(row, &s, g);
                            });
  } else {
    InteractionGraph g(gas);
    double t = 0.0;
    for (std::size_t row = 0; row < rows; ++row) {
      sample_collisions(spec.boltzmann, g, spec.times[row] - t, rng);
      t = spec.times[row];
      observe(row, nullptr, g);
    }
  }
  return out;
}

EnsembleSeries analytic_series(std::string name, const std::vector<double>& times,
                               const std::function<double(double)>& f) {
  EnsembleSeries s{std::move(name), {}};
  for (double t : times) s.rows.push_back({t, f(t), 0.0, 0});
  return s;
}

void add_analytics(const ExperimentSpec& spec, ExperimentResult& result) {
  if (spec.model == Model::boltzmann) {
    const BoltzmannConfig& b = spec.boltzmann;
    const double r = b.collision_rate();
    for (const ObservableSpec& o : spec.observables) {
      if (o.kind != ObservableKind::block_entropy) continue;
      const std::size_t n = b.particles;
      const std::size_t na = o.size;
      const std::string tag = "[size=" + std::to_string(na) + "]";
      result.series.push_back(analytic_series("analytic_short_time" + tag, spec.times, [&](double t) {
        return analytic_short_time_entropy(n, na, r * t).value;
      }));
      result.series.push_back(analytic_series("analytic_lower_bound" + tag, spec.times, [&](double t) {
        return analytic_entropy_lower_bound(n, na, r, t);
      }));
      if (b.phase_mode == PhaseMode::exact) {
        const double slope = small_phase_entropy_slope(b, na);
        result.series.push_back(analytic_series("analytic_small_phase" + tag, spec.times,
                                                [&](double t) { return slope * t; }));
      }
    }
    return;
  }
  const LatticeConfig& l = spec.lattice;
  for (const ObservableSpec& o : spec.observables) {
    if (o.kind == ObservableKind::concurrence && o.schedule == ConcurrenceSchedule::time &&
        l.probes.motion == ProbeMotion::dragged && l.probes.rule == ProbeRule::crossing) {
      result.series.push_back(analytic_series("markovian_00_11", spec.times, [&](double t) {
        const auto k = static_cast<std::size_t>(std::floor(l.probes.speed * t + 1e-9));
        return markovian_analytic(l.filling(), l.probes.crossing_phase, k);
      }));
      break;
    }
  }
}

void assemble(const ExperimentSpec& spec, const Plan& plan,
              const std::vector<Realization>& done, ExperimentResult& result) {
  const std::size_t rows = spec.times.size();
  result.series.clear();
  for (std::size_t c = 0; c < plan.columns.size(); ++c) {
    SeriesAccumulator acc(spec.times);
    for (const Realization& r : done) {
      for (std::size_t row = 0; row < rows; ++row) acc.add(row, r.values[c * rows + row]);
    }
    result.series.push_back(acc.finish(plan.columns[c]));
  }
  for (std::size_t i = 0; i < spec.observables.size(); ++i) {
    const std::size_t slot = plan.channel_slot[i];
    if (slot == kNone || done.empty()) continue;
    const ObservableSpec& o = spec.observables[i];
    std::vector<EnsembleSeries> per_state(o.states.size());
    std::vector<EnsembleSeries> per_state_mean(o.states.size());
    for (std::size_t s = 0; s < o.states.size(); ++s) {
      per_state[s].observable = "concurrence[" + to_string(o.states[s]) + "]";
      per_state_mean[s].observable = "concurrence_mean[" + to_string(o.states[s]) + "]";
    }
    EnsembleSeries c0011{"coherence_00_11", {}};
    EnsembleSeries c0110{"coherence_01_10", {}};
    const int z_same[] = {1, 1};
    const int z_opposite[] = {1, -1};
    for (std::size_t row = 0; row < rows; ++row) {
      std::vector<ProbeChannel> channels;
      channels.reserve(done.size());
      for (const Realization& r : done) channels.push_back(r.channels[slot][row]);
      const double t = spec.times[row];
      for (std::size_t s = 0; s < o.states.size(); ++s) {
        const ConcurrencePoint p = ensemble_concurrence(channels, probe_state(o.states[s]));
        per_state[s].rows.push_back({t, p.averaged_state, p.averaged_state_error, channels.size()});
        per_state_mean[s].rows.push_back({t, p.mean_of_states, p.mean_of_states_error, channels.size()});
      }
      const JackknifeResult a = averaged_coherence(channels, z_same);
      const JackknifeResult b = averaged_coherence(channels, z_opposite);
      c0011.rows.push_back({t, a.value, a.std_error, channels.size()});
      c0110.rows.push_back({t, b.value, b.std_error, channels.size()});
    }
    for (auto& s : per_state) result.series.push_back(std::move(s));
    for (auto& s : per_state_mean) result.series.push_back(std::move(s));
    result.series.push_back(std::move(c0011));
    result.series.push_back(std::move(c0110));
  }
  add_analytics(spec, result);

  std::vector<double> t0;
  for (const Realization& r : done) {
    if (r.t0 >= 0.0) t0.push_back(r.t0);
  }
  if (!t0.empty()) {
    const SeriesRow s = summarize(t0);
    result.metadata["percolation_t0"] = format_double(s.mean);
    result.metadata["percolation_t0_stderr"] = format_double(s.std_error);
    result.metadata["percolation_t0_reached"] = std::to_string(t0.size());
  }
  for (std::size_t i = 0; i < spec.observables.size(); ++i) {
    if (spec.observables[i].kind != ObservableKind::epsilon_stats) continue;
    const EnsembleSeries& sigma = result.series[plan.first_column[i] + 1];
    std::vector<double> ts;
    std::vector<double> ss;
    for (const SeriesRow& row : sigma.rows) {
      ts.push_back(row.t);
      ss.push_back(row.mean);
    }
    const RegimeFit fit = fit_regime_exponent(ts, ss);
    result.metadata["epsilon_exponent"] = format_double(fit.exponent);
    result.metadata["epsilon_regime"] = fit.regime;
  }
}

void base_metadata(const ExperimentSpec& spec, ExperimentResult& result) {
  auto& m = result.metadata;
  m["schema"] = kOutputSchema;
  m["version"] = library_version();
  m["name"] = spec.name;
  m["model"] = model_name(spec.model);
  m["seed"] = std::to_string(spec.seed);
  m["ensemble"] = std::to_string(spec.ensemble);
  m["params_hash"] = result.params_hash;
  m["entropy_units"] = "bits";
  m["rng"] = "splitmix64 counter streams keyed by (seed, realization)";
  m["localizable_lower_bound"] = "pauli_pairs";
  m["phase_sign"] = "U = exp(+i/2 s.Gamma.s)";
  if (spec.model == Model::boltzmann) {
    const BoltzmannConfig& b = spec.boltzmann;
    m["collision_model"] = "stochastic pair sampler, flux-weighted relative speeds";
    m["sigma"] = format_double(b.sigma());
    m["mean_relative_speed"] = format_double(b.mean_relative_speed());
    m["collision_rate"] = format_double(b.collision_rate());
    m["interaction_range"] = "diameter";
    if (b.phase_mode == PhaseMode::exact) {
      const AlphaResult a = analytic_alpha(b);
      m["alpha_closed"] = format_double(a.closed);
      m["alpha_quadrature"] = format_double(a.quadrature);
      m["alpha_small_phase_regime"] = a.in_regime ? "true" : "false";
    }
  } else {
    const LatticeConfig& l = spec.lattice;
    m["distance_metric"] = "manhattan_periodic";
    m["boundary"] = "periodic";
    m["filling"] = format_double(l.filling());
    m["exclusion"] = "reject_occupied";
    m["neighbourhood"] = "von_neumann_4";
    m["dt"] = format_double(l.dt);
    m["background_coupling"] = l.background_coupling ? "true" : "false";
    m["probe_rule"] = to_string(l.probes.rule);
    m["probe_motion"] = to_string(l.probes.motion);
    m["concurrence_headline"] = "averaged_state";
    m["block_selection"] = "per observable, see spec";
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const ProgressCallback& progress) {
  spec.validate();
  const Plan plan = make_plan(spec);
  ExperimentResult result;
  result.params_hash = spec.params_hash();
  base_metadata(spec, result);

  std::vector<Realization> done;
  done.reserve(spec.ensemble);
  const std::size_t workers = resolve_workers(spec.workers, spec.ensemble);
  const std::size_t batch = std::max<std::size_t>(16, 4 * workers);
  for (std::size_t start = 0; start < spec.ensemble; start += batch) {
    const std::size_t count = std::min(batch, spec.ensemble - start);
    auto chunk = map_realizations<Realization>(count, workers, [&](std::size_t i) {
      return run_realization(spec, plan, start + i);
    });
    for (auto& r : chunk) done.push_back(std::move(r));
    if (progress && done.size() < spec.ensemble) {
      ExperimentResult partial = result;
      assemble(spec, plan, done, partial);
      progress(partial, done.size());
    }
  }
  assemble(spec, plan, done, result);

  for (const ObservableSpec& o : spec.observables) {
    if (o.kind != ObservableKind::concurrence || o.schedule != ConcurrenceSchedule::distance) {
      continue;
    }
    const EnsembleOptions options{spec.ensemble, spec.seed, spec.workers};
    auto rows = concurrence_vs_distance(spec.lattice, o.states, o.t_o, o.distances, options);
    result.distance_rows.insert(result.distance_rows.end(), rows.begin(), rows.end());
    result.distance_ensemble = spec.ensemble;
    result.metadata["distance_t_o"] = format_double(o.t_o);
    result.metadata["distance_layout"] = "probes trail a reference probe along the drag axis";
  }
  return result;
}

std::string series_csv(const ExperimentResult& result) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const EnsembleSeries& s : result.series) {
    for (const SeriesRow& row : s.rows) {
      out += format_double(row.t) + "," + format_double(row.mean) + "," +
             format_double(row.std_error) + "," + std::to_string(row.n) + "," + s.observable +
             "," + result.params_hash + "\n";
    }
  }
  return out;
}

std::string distance_csv(const ExperimentResult& result) {
  std::string out = std::string(kDistanceCsvHeader) + "\n";
  for (const DistanceRow& r : result.distance_rows) {
    out += to_string(r.state) + "," + std::to_string(r.distance) + "," +
           format_double(r.concurrence.averaged_state) + "," +
           format_double(r.concurrence.averaged_state_error) + "," +
           format_double(r.concurrence.mean_of_states) + "," +
           format_double(r.concurrence.mean_of_states_error) + "," +
           std::to_string(result.distance_ensemble) + "," + result.params_hash + "\n";
  }
  return out;
}

std::string result_json(const ExperimentSpec& spec, const ExperimentResult& result) {
  json doc;
  doc["schema"] = kOutputSchema;
  doc["metadata"] = result.metadata;
  doc["spec"] = spec_physics_json(spec);
  doc["spec"]["seed"] = spec.seed;
  doc["spec"]["ensemble"] = spec.ensemble;
  json series = json::array();
  for (const EnsembleSeries& s : result.series) {
    json rows = json::array();
    for (const SeriesRow& r : s.rows) {
      rows.push_back({{"t", r.t}, {"mean", r.mean}, {"stderr", r.std_error}, {"n", r.n}});
    }
    series.push_back({{"observable", s.observable}, {"rows", rows}});
  }
  doc["series"] = series;
  if (!result.distance_rows.empty()) {
    json rows = json::array();
    for (const DistanceRow& r : result.distance_rows) {
      rows.push_back({{"state", to_string(r.state)},
                      {"distance", r.distance},
                      {"concurrence", r.concurrence.averaged_state},
                      {"stderr", r.concurrence.averaged_state_error},
                      {"mean_of_states", r.concurrence.mean_of_states},
                      {"mean_of_states_stderr", r.concurrence.mean_of_states_error},
                      {"n", result.distance_ensemble}});
    }
    doc["distance"] = rows;
  }
  return doc.dump(2) + "\n";
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::vector<std::filesystem::path> run_and_write(const ExperimentSpec& spec) {
  std::filesystem::create_directories(spec.output);
  const std::filesystem::path csv = spec.output / (spec.name + ".csv");
  const std::filesystem::path partial = spec.output / (spec.name + ".partial.csv");
  const std::filesystem::path js = spec.output / (spec.name + ".json");

  const ExperimentResult result = run_experiment(spec, [&](const ExperimentResult& r, std::size_t) {
    write_file(partial, series_csv(r));
  });
  std::vector<std::filesystem::path> written{csv, js};
  write_file(csv, series_csv(result));
  write_file(js, result_json(spec, result));
  if (!result.distance_rows.empty()) {
    const std::filesystem::path dist = spec.output / (spec.name + "_distance.csv");
    write_file(dist, distance_csv(result));
    written.push_back(dist);
  }
  std::filesystem::remove(partial);
  return written;
}

}  // namespace spingas
