#include "spingas/decoherence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "spingas/entanglement.hpp"
#include "spingas/errors.hpp"

namespace spingas {

// ---------------------------------------------------------------------------
// ProbeChannel

ProbeChannel::ProbeChannel(std::size_t n_probes, std::vector<cplx> coefficients, double time,
                           std::size_t realization)
    : n_probes_(n_probes),
      coefficients_(std::move(coefficients)),
      time_(time),
      realization_(realization) {
  if (n_probes_ == 0 || n_probes_ > kDefaultSubsystemCap) {
    throw PreconditionError("probe channel: probe count must lie in [1, 12]");
  }
  if (coefficients_.size() != ternary_size(n_probes_)) {
    throw PreconditionError("probe channel: need 3^N_A coefficients");
  }
}

ProbeChannel ProbeChannel::from_graph(const InteractionGraph& g, const Partition& probes,
                                      double time, std::size_t realization) {
  return ProbeChannel(probes.size(), CouplingBlock(g, probes).all_coherences(), time,
                      realization);
}

ProbeChannel ProbeChannel::identity(std::size_t n_probes) {
  return ProbeChannel(n_probes, std::vector<cplx>(ternary_size(n_probes), 1.0));
}

ProbeChannel ProbeChannel::fully_dephasing(std::size_t n_probes) {
  std::vector<cplx> c(ternary_size(n_probes), 0.0);
  c[0] = 1.0;
  return ProbeChannel(n_probes, std::move(c));
}

double ProbeChannel::invariant_error() const {
  double err = std::abs(coefficients_[0] - 1.0);
  std::vector<int> neg(n_probes_);
  for (std::size_t index = 0; index < coefficients_.size(); ++index) {
    const cplx c = coefficients_[index];
    err = std::max(err, std::abs(c) - 1.0);
    const std::vector<int> z = ternary_vector(index, n_probes_);
    for (std::size_t m = 0; m < n_probes_; ++m) neg[m] = -z[m];
    err = std::max(err, std::abs(coefficients_[ternary_index(neg)] - std::conj(c)));
  }
  return std::max(err, 0.0);
}

DensityMatrix apply_channel(const ProbeChannel& channel, const DensityMatrix& rho_in) {
  const std::size_t n = channel.n_probes();
  const std::size_t dim = std::size_t{1} << n;
  if (rho_in.dim() != dim) {
    throw PreconditionError("apply_channel: state dimension " + std::to_string(rho_in.dim()) +
                            " does not match " + std::to_string(n) + " probes");
  }
  Eigen::MatrixXcd out = rho_in.matrix();
  std::vector<int> z(n);
  for (std::size_t s = 0; s < dim; ++s) {
    for (std::size_t sp = 0; sp < dim; ++sp) {
      if (s == sp) continue;
      for (std::size_t m = 0; m < n; ++m) z[m] = basis_bit(s, m, n) - basis_bit(sp, m, n);
      out(s, sp) *= channel.coefficient(z);
    }
  }
  DensityMatrix rho(std::move(out), rho_in.subset());
  const double lowest = rho.spectrum().minCoeff();
  if (lowest < -1e-8) {
    throw InvalidStateError("apply_channel: output not positive semidefinite (eigenvalue " +
                            std::to_string(lowest) + ")");
  }
  return rho;
}

ProbeChannel average_channel(std::span<const ProbeChannel> channels) {
  if (channels.empty()) throw PreconditionError("average_channel: empty ensemble");
  const std::size_t n = channels.front().n_probes();
  std::vector<cplx> sum(ternary_size(n), 0.0);
  for (const ProbeChannel& ch : channels) {
    if (ch.n_probes() != n) throw PreconditionError("average_channel: mixed probe counts");
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += ch.coefficients()[i];
  }
  for (cplx& c : sum) c /= static_cast<double>(channels.size());
  return ProbeChannel(n, std::move(sum), channels.front().time());
}

double markovian_analytic(double nu, double delta_phi, std::size_t k) {
  if (!(nu >= 0.0 && nu <= 1.0)) throw PreconditionError("markovian_analytic: nu outside [0, 1]");
  const cplx per_step = nu * std::polar(1.0, 0.5 * delta_phi) * std::cos(0.5 * delta_phi) + (1.0 - nu);
  return std::pow(std::abs(per_step), 2.0 * static_cast<double>(k));
}

// ---------------------------------------------------------------------------
// Probe states

std::string to_string(ProbeState s) {
  switch (s) {
    case ProbeState::psi_plus:
      return "psi_plus";
    case ProbeState::phi_plus:
      return "phi_plus";
    case ProbeState::cluster:
      return "cluster";
  }
  return "unknown";
}

ProbeState probe_state_from_string(const std::string& name) {
  if (name == "psi_plus") return ProbeState::psi_plus;
  if (name == "phi_plus") return ProbeState::phi_plus;
  if (name == "cluster" || name == "G") return ProbeState::cluster;
  throw ConfigError("state", "expected psi_plus, phi_plus or cluster, got \"" + name + "\"");
}

DensityMatrix probe_state(ProbeState s) {
  Eigen::Vector4cd psi = Eigen::Vector4cd::Zero();
  switch (s) {
    case ProbeState::psi_plus:
      psi << 0.0, 1.0, 1.0, 0.0;
      break;
    case ProbeState::phi_plus:
      psi << 1.0, 0.0, 0.0, 1.0;
      break;
    case ProbeState::cluster:
      psi << 1.0, 1.0, 1.0, -1.0;
      break;
  }
  return DensityMatrix::from_pure(psi);
}

double cluster_from_bell_concurrence(double c_bell) {
  if (c_bell <= 0.0) return 0.0;
  return std::max(0.0, 0.5 * (-1.0 + 2.0 * std::sqrt(c_bell) + c_bell));
}

// ---------------------------------------------------------------------------
// ε statistics

EpsilonStats epsilon_distribution(const InteractionGraph& g, const Partition& p,
                                  std::span<const int> z, std::size_t n_samples, Rng& rng,
                                  std::size_t bins) {
  if (z.size() != p.size()) throw PreconditionError("epsilon_distribution: z length mismatch");
  if (bins == 0) throw PreconditionError("epsilon_distribution: need at least one bin");
  const CouplingBlock block(g, p);
  std::vector<double> weight;
  for (std::size_t r = 0; r < block.partner_count(); ++r) {
    double dot = 0.0;
    for (std::size_t m = 0; m < block.block_size(); ++m) dot += z[m] * block.coupling(r, m);
    if (dot != 0.0) weight.push_back(dot);
  }

  EpsilonStats out;
  for (double w : weight) (w < 0.0 ? out.histogram_low : out.histogram_high) += w;
  out.histogram.assign(bins, 0.0);
  const double span = out.histogram_high - out.histogram_low;
  auto bin_of = [&](double e) {
    if (span <= 0.0) return std::size_t{0};
    const auto b = static_cast<std::size_t>((e - out.histogram_low) / span * bins);
    return std::min(b, bins - 1);
  };

  double sum = 0.0;
  double sum_sq = 0.0;
  auto record = [&](double e) {
    sum += e;
    sum_sq += e * e;
    out.histogram[bin_of(e)] += 1.0;
  };

  if (weight.size() <= kExactEpsilonPartners) {
    out.exact = true;
    const std::size_t count = std::size_t{1} << weight.size();
    // Gray-code walk: one partner flips per step.
    double e = 0.0;
    std::size_t gray = 0;
    record(e);
    for (std::size_t i = 1; i < count; ++i) {
      const std::size_t next = i ^ (i >> 1);
      const std::size_t flipped = next ^ gray;
      std::size_t r = 0;
      while ((flipped >> r) != 1u) ++r;
      e += (next & flipped) ? weight[r] : -weight[r];
      gray = next;
      record(e);
    }
    out.samples = count;
  } else {
    if (n_samples == 0) throw PreconditionError("epsilon_distribution: need samples");
    for (std::size_t i = 0; i < n_samples; ++i) {
      double e = 0.0;
      for (std::size_t r = 0; r < weight.size(); r += 64) {
        std::uint64_t bits = rng();
        for (std::size_t b = r; b < std::min(weight.size(), r + 64); ++b, bits >>= 1) {
          if (bits & 1u) e += weight[b];
        }
      }
      record(e);
    }
    out.samples = n_samples;
  }
  const double n = static_cast<double>(out.samples);
  out.mean = sum / n;
  out.sigma = std::sqrt(std::max(0.0, sum_sq / n - out.mean * out.mean));
  for (double& h : out.histogram) h /= n;
  return out;
}

RegimeFit fit_regime_exponent(std::span<const double> times, std::span<const double> sigmas,
                              double low, double high) {
  if (times.size() != sigmas.size()) {
    throw PreconditionError("fit_regime_exponent: times and sigmas differ in length");
  }
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] > 0.0 && sigmas[i] >= low && sigmas[i] <= high) {
      x.push_back(std::log(times[i]));
      y.push_back(std::log(sigmas[i]));
    }
  }
  RegimeFit fit;
  fit.points = x.size();
  if (x.size() < 2) {
    fit.regime = "undetermined";
    return fit;
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) {
    fit.regime = "undetermined";
    return fit;
  }
  fit.exponent = sxy / sxx;
  fit.regime = fit.exponent < 0.75 ? "markovian" : "non_markovian";
  return fit;
}

// ---------------------------------------------------------------------------
// Ensemble concurrence

namespace {

std::vector<std::vector<double>> flatten(std::span<const ProbeChannel> channels) {
  std::vector<std::vector<double>> out;
  out.reserve(channels.size());
  for (const ProbeChannel& ch : channels) {
    std::vector<double> row;
    row.reserve(2 * ch.coefficients().size());
    for (const cplx& c : ch.coefficients()) {
      row.push_back(c.real());
      row.push_back(c.imag());
    }
    out.push_back(std::move(row));
  }
  return out;
}

ProbeChannel unflatten(const std::vector<double>& row, std::size_t n_probes) {
  std::vector<cplx> c(row.size() / 2);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = {row[2 * i], row[2 * i + 1]};
  return ProbeChannel(n_probes, std::move(c));
}

}  // namespace

ConcurrencePoint ensemble_concurrence(std::span<const ProbeChannel> channels,
                                      const DensityMatrix& input) {
  if (channels.empty()) throw PreconditionError("ensemble_concurrence: empty ensemble");
  const std::size_t n = channels.front().n_probes();
  if (n != 2) throw PreconditionError("ensemble_concurrence: needs two-probe channels");
  ConcurrencePoint out;
  const JackknifeResult averaged =
      jackknife(flatten(channels), [&](const std::vector<double>& mean) {
        return concurrence(apply_channel(unflatten(mean, n), input));
      });
  out.averaged_state = averaged.value;
  out.averaged_state_error = averaged.std_error;

  std::vector<double> each;
  each.reserve(channels.size());
  for (const ProbeChannel& ch : channels) each.push_back(concurrence(apply_channel(ch, input)));
  const SeriesRow row = summarize(each);
  out.mean_of_states = row.mean;
  out.mean_of_states_error = row.std_error;
  return out;
}

JackknifeResult averaged_coherence(std::span<const ProbeChannel> channels,
                                   std::span<const int> z) {
  if (channels.empty()) throw PreconditionError("averaged_coherence: empty ensemble");
  const std::size_t index = ternary_index(z);
  std::vector<std::vector<double>> samples;
  samples.reserve(channels.size());
  for (const ProbeChannel& ch : channels) {
    if (z.size() != ch.n_probes()) throw PreconditionError("averaged_coherence: z length");
    const cplx c = ch.coefficients()[index];
    samples.push_back({c.real(), c.imag()});
  }
  return jackknife(samples, [](const std::vector<double>& m) { return std::hypot(m[0], m[1]); });
}

ProbeChannelSeries probe_channel_timeseries(const LatticeConfig& cfg,
                                            const std::vector<double>& times,
                                            const EnsembleOptions& options) {
  if (cfg.probes.count < 2) throw PreconditionError("probe channels need two probes");
  const Partition pair({cfg.probe_index(0), cfg.probe_index(1)}, cfg.total_particles());
  using Run = std::vector<ProbeChannel>;
  const auto runs = map_realizations<Run>(options.ensemble, options.workers, [&](std::size_t i) {
    Rng rng(options.seed, i);
    Run run;
    run.reserve(times.size());
    run_lattice_realization(cfg, times, rng,
                            [&](std::size_t row, const LatticeState&, const InteractionGraph& g) {
                              run.push_back(ProbeChannel::from_graph(g, pair, times[row], i));
                            });
    return run;
  });
  ProbeChannelSeries out;
  out.times = times;
  out.channels.assign(times.size(), {});
  for (const Run& run : runs) {
    for (std::size_t row = 0; row < times.size(); ++row) out.channels[row].push_back(run[row]);
  }
  return out;
}

std::vector<DistanceRow> concurrence_vs_distance(const LatticeConfig& cfg,
                                                 std::span<const ProbeState> states, double t_o,
                                                 std::span<const int> distances,
                                                 const EnsembleOptions& options) {
  if (distances.empty()) throw PreconditionError("concurrence_vs_distance: no distances");
  LatticeConfig run_cfg = cfg;
  run_cfg.probes.count = distances.size() + 1;
  run_cfg.probes.offsets.assign(1, Site{0, 0});
  for (int d : distances) {
    if (d < 0) throw PreconditionError("concurrence_vs_distance: negative distance");
    run_cfg.probes.offsets.push_back(run_cfg.probes.axis == Axis::x ? Site{-d, 0} : Site{0, -d});
  }
  run_cfg.validate();

  const std::vector<double> times{t_o};
  using Run = std::vector<ProbeChannel>;
  const auto runs = map_realizations<Run>(options.ensemble, options.workers, [&](std::size_t i) {
    Rng rng(options.seed, i);
    Run run;
    run_lattice_realization(
        run_cfg, times, rng, [&](std::size_t, const LatticeState&, const InteractionGraph& g) {
          for (std::size_t j = 0; j < distances.size(); ++j) {
            const Partition pair({run_cfg.probe_index(0), run_cfg.probe_index(j + 1)},
                                 run_cfg.total_particles());
            run.push_back(ProbeChannel::from_graph(g, pair, t_o, i));
          }
        });
    return run;
  });

  std::vector<DistanceRow> rows;
  for (ProbeState state : states) {
    const DensityMatrix input = probe_state(state);
    for (std::size_t j = 0; j < distances.size(); ++j) {
      std::vector<ProbeChannel> channels;
      channels.reserve(runs.size());
      for (const Run& run : runs) channels.push_back(run[j]);
      rows.push_back({state, distances[j], ensemble_concurrence(channels, input)});
    }
  }
  return rows;
}

}  // namespace spingas
