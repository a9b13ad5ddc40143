#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "spingas/boltzmann.hpp"
#include "spingas/decoherence.hpp"
#include "spingas/ensemble.hpp"
#include "spingas/lattice.hpp"

namespace spingas {

/// Version of the CSV/JSON output layout. Bumped on any column change.
inline constexpr const char* kOutputSchema = "spingas.series.v1";
inline constexpr const char* kCsvHeader = "t,mean,stderr,n,observable,params_hash";
inline constexpr const char* kDistanceCsvHeader =
    "state,distance,concurrence,stderr,mean_of_states,mean_of_states_stderr,n,params_hash";

std::string library_version();

enum class Model { boltzmann, lattice };

enum class ObservableKind {
  block_entropy,
  probe_entropy,
  cluster_stats,
  concurrence,
  meyer_wallach,
  epsilon_stats,
  coherence_squared,
};

enum class BlockSelection {
  first,     ///< particles 0 .. size-1
  random,    ///< uniform random block, drawn once per realization
  sweep,     ///< average over all disjoint consecutive blocks
  explicit_  ///< the listed members
};

enum class ConcurrenceSchedule {
  time,     ///< probes 0 and 1 at every grid time
  distance  ///< pairs at several separations at one time t_o
};

struct ObservableSpec {
  ObservableKind kind = ObservableKind::block_entropy;
  // block_entropy
  std::size_t size = 1;
  BlockSelection selection = BlockSelection::random;
  std::vector<std::size_t> members;
  // concurrence
  std::vector<ProbeState> states{ProbeState::psi_plus, ProbeState::phi_plus,
                                 ProbeState::cluster};
  ConcurrenceSchedule schedule = ConcurrenceSchedule::time;
  std::vector<int> distances;
  double t_o = 0.0;
  // epsilon_stats
  std::vector<int> z{1, 1};
  std::size_t samples = 1000;
};

struct ExperimentSpec {
  std::string name = "experiment";
  Model model = Model::lattice;
  BoltzmannConfig boltzmann;
  LatticeConfig lattice;
  std::vector<ObservableSpec> observables;
  std::vector<double> times;
  std::size_t ensemble = 1;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::filesystem::path output = ".";

  /// FNV-1a of the canonical spec with seed, ensemble, workers and output
  /// removed, as 16 hex digits.
  std::string params_hash() const;
  /// Canonical JSON of the physics content (what params_hash covers).
  std::string canonical_json() const;

  /// Checks model configs and observable/model compatibility.
  void validate() const;
};

/// Parses TOML (`toml` true) or JSON text. Errors carry the field path.
ExperimentSpec parse_experiment(const std::string& text, bool toml);
/// Format chosen by extension: .toml or .json.
ExperimentSpec load_experiment(const std::filesystem::path& path);

struct ExperimentResult {
  std::vector<EnsembleSeries> series;
  std::vector<DistanceRow> distance_rows;
  std::size_t distance_ensemble = 0;
  std::string params_hash;
  std::map<std::string, std::string> metadata;
};

/// Called after each completed batch of realizations with the partial result.
using ProgressCallback = std::function<void(const ExperimentResult&, std::size_t done)>;

ExperimentResult run_experiment(const ExperimentSpec& spec, const ProgressCallback& progress = {});

std::string series_csv(const ExperimentResult& result);
std::string distance_csv(const ExperimentResult& result);
std::string result_json(const ExperimentSpec& spec, const ExperimentResult& result);

/// Writes <output>/<name>.csv, <name>.json and, for distance schedules,
/// <name>_distance.csv. Partial results go to <name>.partial.csv while the
/// run is in progress. Returns the paths written.
std::vector<std::filesystem::path> run_and_write(const ExperimentSpec& spec);

}  // namespace spingas
