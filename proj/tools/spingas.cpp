// Command line front end: runs experiment configs, the brute-force oracle
// suite and the closed-form expressions.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "spingas/boltzmann.hpp"
#include "spingas/decoherence.hpp"
#include "spingas/errors.hpp"
#include "spingas/experiment.hpp"
#include "spingas/oracle.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> ensemble;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "Experiment file (.toml or .json)")
      ->required()
      ->check(CLI::ExistingFile)
      ->envname("SPINGAS_CONFIG");
  cmd->add_option("--seed", f.seed, "Base RNG seed")->envname("SPINGAS_SEED");
  cmd->add_option("--ensemble", f.ensemble, "Number of realizations")
      ->check(CLI::PositiveNumber)
      ->envname("SPINGAS_ENSEMBLE");
  cmd->add_option("--out", f.out, "Output directory")->envname("SPINGAS_OUT");
  cmd->add_option("--workers", f.workers, "Worker threads (0 = all cores)")
      ->envname("SPINGAS_WORKERS");
}

int run_model(spingas::Model expected, const RunFlags& f) {
  spingas::ExperimentSpec spec = spingas::load_experiment(f.config);
  if (spec.model != expected) {
    throw spingas::ConfigError("model", "config describes a different model than the subcommand");
  }
  if (f.seed) spec.seed = *f.seed;
  if (f.ensemble) spec.ensemble = *f.ensemble;
  if (f.out) spec.output = *f.out;
  if (f.workers) spec.workers = *f.workers;
  spec.validate();
  for (const auto& path : spingas::run_and_write(spec)) std::cout << path.string() << "\n";
  return kExitOk;
}

struct AnalyticFlags {
  std::string formula;
  std::size_t n = 0;
  std::size_t n_a = 1;
  std::optional<double> rt;
  std::optional<double> r;
  std::optional<double> t;
  spingas::BoltzmannConfig gas;
  double dphi = 0.0;
  double dt = 0.0;
};

void print_value(const std::string& label, double value, bool in_regime = true) {
  std::printf("%s = %.10g%s\n", label.c_str(), value, in_regime ? "" : "  (outside validity range)");
}

int run_analytic(AnalyticFlags& f) {
  const auto need = [](bool ok, const std::string& what) {
    if (!ok) throw spingas::ConfigError(what, "required for this expression");
  };
  const auto product = [&]() {
    if (f.rt) return *f.rt;
    need(f.r && f.t, "--rt");
    return *f.r * *f.t;
  };
  if (f.formula == "short-time") {
    need(f.n >= 2, "--N");
    const auto v = spingas::analytic_short_time_entropy(f.n, f.n_a, product());
    print_value("S_A", v.value, v.in_regime);
  } else if (f.formula == "lower-bound") {
    need(f.n >= 2, "--N");
    const double rt = product();
    print_value("S_A lower bound", spingas::analytic_entropy_lower_bound(f.n, f.n_a, 1.0, rt));
    const auto s = spingas::short_time_lower_bound(f.n, f.n_a, rt);
    print_value("short-time form", s.value, s.in_regime);
    print_value("long-time form", spingas::long_time_lower_bound(f.n, f.n_a, rt));
  } else if (f.formula == "alpha") {
    f.gas.particles = std::max<std::size_t>(f.n, 2);
    f.gas.validate();
    const auto a = spingas::analytic_alpha(f.gas);
    print_value("alpha (closed form)", a.closed, a.in_regime);
    print_value("alpha (quadrature)", a.quadrature);
    if (f.n >= 2) {
      print_value("dS_A/dt at t = 0", spingas::small_phase_entropy_slope(f.gas, f.n_a), a.in_regime);
    }
  } else if (f.formula == "tau") {
    const auto tau = spingas::decoherence_times(f.dphi, f.dt);
    print_value("tau_e", tau.tau_e);
    print_value("tau_g", tau.tau_g);
  } else if (f.formula == "markovian") {
    need(f.t.has_value(), "--t");
    print_value("|C_00,11|", spingas::markovian_analytic(f.gas.density, f.dphi,
                                                         static_cast<std::size_t>(*f.t)));
  } else {
    throw spingas::ConfigError("--formula",
                               "expected short-time, lower-bound, alpha, tau or markovian");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin-gas ensemble simulator with analytic cross-checks", "spingas"};
  app.set_version_flag("--version", spingas::library_version());
  app.require_subcommand(1);

  RunFlags boltzmann_flags;
  auto* boltzmann = app.add_subcommand("boltzmann", "Run a Boltzmann gas experiment");
  add_run_flags(boltzmann, boltzmann_flags);

  RunFlags lattice_flags;
  auto* lattice = app.add_subcommand("lattice", "Run a lattice gas experiment");
  add_run_flags(lattice, lattice_flags);

  std::size_t oracle_n = 12;
  std::size_t oracle_trials = 500;
  std::uint64_t oracle_seed = 1;
  auto* oracle = app.add_subcommand("oracle-check", "Compare the fast engine with brute force");
  oracle->add_option("--n", oracle_n, "Largest particle count")->envname("SPINGAS_ORACLE_N");
  oracle->add_option("--trials", oracle_trials, "Random graphs to test")
      ->envname("SPINGAS_ORACLE_TRIALS");
  oracle->add_option("--seed", oracle_seed, "RNG seed")->envname("SPINGAS_SEED");

  AnalyticFlags af;
  auto* analytic = app.add_subcommand("analytic", "Evaluate closed-form expressions");
  analytic
      ->add_option("--formula", af.formula, "short-time | lower-bound | alpha | tau | markovian")
      ->required();
  analytic->add_option("--N", af.n, "Particle count");
  analytic->add_option("--NA", af.n_a, "Subsystem size");
  analytic->add_option("--rt", af.rt, "Collision rate times time");
  analytic->add_option("--r", af.r, "Collision rate");
  analytic->add_option("--t", af.t, "Time (step count for markovian)");
  analytic->add_option("--density", af.gas.density, "Number density n (filling for markovian)");
  analytic->add_option("--temperature", af.gas.temperature, "Temperature");
  analytic->add_option("--mass", af.gas.mass, "Particle mass");
  analytic->add_option("--diameter", af.gas.diameter, "Sphere diameter");
  analytic->add_option("--gamma", af.gas.coupling, "Coupling strength");
  analytic->add_option("--kB", af.gas.boltzmann_constant, "Boltzmann constant");
  analytic->add_option("--dphi", af.dphi, "Phase per collision");
  analytic->add_option("--dt", af.dt, "Time per collision");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*boltzmann) return run_model(spingas::Model::boltzmann, boltzmann_flags);
    if (*lattice) return run_model(spingas::Model::lattice, lattice_flags);
    if (*oracle) {
      const auto report = spingas::run_oracle_check(oracle_n, oracle_trials, oracle_seed);
      std::cout << report.summary() << "\n";
      return report.passed() ? kExitOk : kExitFailed;
    }
    if (*analytic) return run_analytic(af);
  } catch (const spingas::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  }
  return kExitUsage;
}
