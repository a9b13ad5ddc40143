#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "spingas/errors.hpp"
#include "spingas/experiment.hpp"

using namespace spingas;

namespace {

const char* kLattice = R"(
name = "unit"
model = "lattice"
seed = 3
ensemble = 8
times = [0.0, 1.0, 2.0]

[lattice]
size = 8
filling = 0.5
dt = 0.1

[[observables]]
kind = "block_entropy"
size = 2
selection = "random"

[[observables]]
kind = "cluster_stats"
)";

const char* kBoltzmann = R"(
name = "gas"
model = "boltzmann"
seed = 4
ensemble = 40
times = { start = 0.0, stop = 0.2, step = 0.1 }

[boltzmann]
particles = 12
diameter = 0.2
phase_mode = "random_uniform"

[[observables]]
kind = "block_entropy"
size = 1
selection = "sweep"
)";

std::string field_of(const std::string& text) {
  try {
    parse_experiment(text, true);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  REQUIRE(at != std::string::npos);
  return text.replace(at, from.size(), to);
}

const EnsembleSeries& series(const ExperimentResult& r, const std::string& name) {
  for (const EnsembleSeries& s : r.series) {
    if (s.observable == name) return s;
  }
  FAIL("missing series " << name);
  return r.series.front();
}

}  // namespace

TEST_SUITE("runner") {

TEST_CASE("parse errors name the offending field") {
  CHECK(field_of(kLattice) == "<accepted>");
  CHECK(field_of(replace(kLattice, "dt = 0.1", "dt = -0.1")) == "lattice.dt");
  CHECK(field_of(replace(kLattice, "dt = 0.1", "dt = 0.1\nhop_rat = 1.0")) == "lattice.hop_rat");
  CHECK(field_of(replace(kLattice, "size = 2", "size = 20")) == "observables[0].size");
  CHECK(field_of(replace(kLattice, "model = \"lattice\"", "model = \"gas\"")) == "model");
  CHECK(field_of(replace(kLattice, "kind = \"cluster_stats\"", "kind = \"entropy\"")) ==
        "observables[1].kind");
  CHECK(field_of(replace(kLattice, "filling = 0.5", "filling = 1.5")) == "lattice.filling");
  CHECK_THROWS_AS(parse_experiment("name = [", true), ConfigError);
}

TEST_CASE("json configs parse like toml") {
  const ExperimentSpec a = parse_experiment(kLattice, true);
  const std::string json_text = R"({"name": "unit", "model": "lattice", "seed": 3, "ensemble": 8,
    "times": [0.0, 1.0, 2.0], "lattice": {"size": 8, "filling": 0.5, "dt": 0.1},
    "observables": [{"kind": "block_entropy", "size": 2, "selection": "random"},
                    {"kind": "cluster_stats"}]})";
  const ExperimentSpec b = parse_experiment(json_text, false);
  CHECK(a.canonical_json() == b.canonical_json());
  CHECK(a.params_hash() == b.params_hash());
}

TEST_CASE("observables must suit the model") {
  CHECK(field_of(replace(kBoltzmann, "kind = \"block_entropy\"\nsize = 1\nselection = \"sweep\"",
                         "kind = \"cluster_stats\"")) == "observables[0].kind");
  CHECK(field_of(replace(kLattice, "kind = \"cluster_stats\"", "kind = \"concurrence\"")) ==
        "observables[1]");
}

TEST_CASE("params hash ignores run controls") {
  const ExperimentSpec a = parse_experiment(kLattice, true);
  ExperimentSpec b = a;
  b.seed = 99;
  b.ensemble = 3;
  b.workers = 4;
  b.output = "/elsewhere";
  CHECK(a.params_hash() == b.params_hash());
  CHECK(a.params_hash().size() == 16);
  b.lattice.coupling = 0.7;
  CHECK(a.params_hash() != b.params_hash());
}

TEST_CASE("runs are deterministic across worker counts") {
  ExperimentSpec spec = parse_experiment(kLattice, true);
  spec.workers = 1;
  const std::string one = series_csv(run_experiment(spec));
  CHECK(one == series_csv(run_experiment(spec)));
  spec.workers = 2;
  CHECK(one == series_csv(run_experiment(spec)));
  CHECK(one.rfind(kCsvHeader, 0) == 0);
}

TEST_CASE("seed changes realizations but not analytic columns") {
  ExperimentSpec spec = parse_experiment(kBoltzmann, true);
  const ExperimentResult a = run_experiment(spec);
  spec.seed = 5;
  const ExperimentResult b = run_experiment(spec);
  const auto& ma = series(a, "block_entropy[size=1,sweep]").rows.back();
  const auto& mb = series(b, "block_entropy[size=1,sweep]").rows.back();
  CHECK(ma.mean != mb.mean);
  const auto& aa = series(a, "analytic_short_time[size=1]").rows;
  const auto& ab = series(b, "analytic_short_time[size=1]").rows;
  for (std::size_t i = 0; i < aa.size(); ++i) CHECK(aa[i].mean == ab[i].mean);
}

TEST_CASE("a gas without interactions stays unentangled") {
  ExperimentSpec spec = parse_experiment(replace(kLattice, "dt = 0.1", "dt = 0.1\ncoupling = 0.0"), true);
  const ExperimentResult r = run_experiment(spec);
  for (const SeriesRow& row : series(r, "block_entropy[size=2,random]").rows) CHECK(row.mean == 0.0);
  for (const SeriesRow& row : series(r, "cluster_size").rows) CHECK(row.mean == 1.0);
}

TEST_CASE("standard error shrinks with the ensemble") {
  ExperimentSpec spec = parse_experiment(kBoltzmann, true);
  spec.ensemble = 400;
  const double small = series(run_experiment(spec), "block_entropy[size=1,sweep]").rows.back().std_error;
  spec.ensemble = 800;
  const double large = series(run_experiment(spec), "block_entropy[size=1,sweep]").rows.back().std_error;
  CHECK(large / small == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.15));
}

TEST_CASE("progress reports every batch") {
  ExperimentSpec spec = parse_experiment(kBoltzmann, true);
  spec.ensemble = 40;
  std::size_t calls = 0;
  std::size_t last = 0;
  run_experiment(spec, [&](const ExperimentResult&, std::size_t done) {
    ++calls;
    CHECK(done > last);
    last = done;
  });
  // the final batch is returned, not reported
  CHECK(calls == 2);
  CHECK(last == 32);
}

TEST_CASE("output files") {
  const auto dir = std::filesystem::temp_directory_path() / "spingas_runner_test";
  std::filesystem::remove_all(dir);
  ExperimentSpec spec = parse_experiment(kLattice, true);
  spec.output = dir;
  const auto written = run_and_write(spec);
  CHECK(written.size() == 2);
  CHECK(std::filesystem::exists(dir / "unit.csv"));
  CHECK_FALSE(std::filesystem::exists(dir / "unit.partial.csv"));
  std::ifstream in(dir / "unit.json");
  const nlohmann::json meta = nlohmann::json::parse(in);
  CHECK(meta["metadata"]["params_hash"] == spec.params_hash());
  CHECK(meta["schema"] == kOutputSchema);
  std::filesystem::remove_all(dir);
}

TEST_CASE("bundled recipes parse") {
  std::size_t seen = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(SPINGAS_RECIPE_DIR)) {
    if (entry.path().extension() != ".toml") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_experiment(entry.path()));
    ++seen;
  }
  CHECK(seen >= 10);
}

}  // TEST_SUITE
