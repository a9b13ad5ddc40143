#include "spingas/boltzmann.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "spingas/errors.hpp"

namespace spingas {

std::string to_string(PhaseMode mode) {
  return mode == PhaseMode::exact ? "exact" : "random_uniform";
}

PhaseMode phase_mode_from_string(const std::string& name) {
  if (name == "exact") return PhaseMode::exact;
  if (name == "random_uniform" || name == "random-uniform") return PhaseMode::random_uniform;
  throw ConfigError("phase_mode", "expected \"exact\" or \"random_uniform\", got \"" + name + "\"");
}

double BoltzmannConfig::sigma() const { return std::sqrt(boltzmann_constant * temperature / mass); }

double BoltzmannConfig::mean_relative_speed() const {
  return std::sqrt(16.0 * boltzmann_constant * temperature / (mass * std::numbers::pi));
}

double BoltzmannConfig::collision_rate() const {
  return std::numbers::pi * diameter * diameter * density * mean_relative_speed();
}

void BoltzmannConfig::validate() const {
  auto positive = [](double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(field, "must be positive and finite");
  };
  positive(density, "density");
  positive(temperature, "temperature");
  positive(mass, "mass");
  positive(diameter, "diameter");
  positive(coupling, "coupling");
  positive(boltzmann_constant, "boltzmann_constant");
  if (particles < 2) throw ConfigError("particles", "need at least two particles");
}

double sample_relative_speed(double sigma, Rng& rng) {
  std::gamma_distribution<double> gamma(2.0, 1.0);
  const double v = 2.0 * sigma * std::sqrt(gamma(rng));
  return std::max(v, 1e-6 * sigma);
}

double sample_collision_phase(const BoltzmannConfig& cfg, Rng& rng) {
  if (cfg.phase_mode == PhaseMode::random_uniform) return kTwoPi * rng.uniform();
  return cfg.coupling / sample_relative_speed(cfg.sigma(), rng);
}

std::size_t sample_collisions(const BoltzmannConfig& cfg, InteractionGraph& g, double dt,
                              Rng& rng) {
  if (dt < 0.0 || !std::isfinite(dt)) throw PreconditionError("sample_collisions: bad dt");
  if (g.size() != cfg.particles) {
    throw PreconditionError("sample_collisions: graph size does not match the configuration");
  }
  if (dt == 0.0) return 0;
  const std::size_t n = cfg.particles;
  const double rate = cfg.collision_rate();
  const auto substeps = static_cast<std::size_t>(
      std::max(1.0, std::ceil(rate * dt / kMaxCollisionsPerSubstep)));
  const double h = dt / static_cast<double>(substeps);
  const double p = rate * h / static_cast<double>(n - 1);
  const std::uint64_t pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;

  std::size_t total = 0;
  std::vector<std::uint64_t> chosen;
  for (std::size_t step = 0; step < substeps; ++step) {
    std::binomial_distribution<std::uint64_t> count(pairs, p);
    const std::uint64_t k = count(rng);
    chosen.clear();
    while (chosen.size() < k) {
      const auto a = static_cast<std::size_t>(rng() % n);
      auto b = static_cast<std::size_t>(rng() % (n - 1));
      if (b >= a) ++b;
      const std::uint64_t key = static_cast<std::uint64_t>(std::min(a, b)) * n + std::max(a, b);
      if (std::find(chosen.begin(), chosen.end(), key) != chosen.end()) continue;
      chosen.push_back(key);
      g.add_phase(std::min(a, b), std::max(a, b), sample_collision_phase(cfg, rng));
    }
    total += k;
  }
  return total;
}

AnalyticValue analytic_short_time_entropy(std::size_t n, std::size_t n_a, double rt) {
  if (n < 2 || n_a == 0 || n_a >= n) {
    throw PreconditionError("analytic_short_time_entropy: need 0 < N_A < N");
  }
  const double n_b = static_cast<double>(n - n_a);
  const double value =
      static_cast<double>(n_a) * n_b / static_cast<double>(n - 1) * rt * kRandomPhaseEntropy;
  return {value, rt < 1.0};
}

AnalyticValue analytic_short_time_entropy(const BoltzmannConfig& cfg, std::size_t n_a,
                                          double t) {
  return analytic_short_time_entropy(cfg.particles, n_a, cfg.collision_rate() * t);
}

namespace {

double log_binomial(std::size_t n, std::size_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace

double analytic_entropy_lower_bound(std::size_t n, std::size_t n_a, double r, double t) {
  if (n < 2 || n_a == 0 || n_a >= n) {
    throw PreconditionError("analytic_entropy_lower_bound: need 0 < N_A < N");
  }
  if (t == 0.0) return 0.0;
  const double rt = r * t;
  const double n_b = static_cast<double>(n - n_a);
  std::vector<double> terms(n_a + 1);
  for (std::size_t z = 0; z <= n_a; ++z) {
    const double decay = std::exp(-rt * static_cast<double>(z) / static_cast<double>(n - 1));
    terms[z] = log_binomial(n_a, z) + n_b * std::log1p(decay);
  }
  const double top = *std::max_element(terms.begin(), terms.end());
  double sum = 0.0;
  for (double term : terms) sum += std::exp(term - top);
  const double log2_sum = (top + std::log(sum)) / std::numbers::ln2;
  return std::max(0.0, static_cast<double>(n) - log2_sum);
}

AnalyticValue short_time_lower_bound(std::size_t n, std::size_t n_a, double rt) {
  if (n < 2 || n_a == 0 || n_a >= n) {
    throw PreconditionError("short_time_lower_bound: need 0 < N_A < N");
  }
  const double x = static_cast<double>(n_a) * static_cast<double>(n - n_a) /
                   (4.0 * static_cast<double>(n - 1)) * rt;
  const bool in_regime = rt * static_cast<double>(n_a) / static_cast<double>(n - 1) < 1.0;
  if (x >= 1.0) return {std::numeric_limits<double>::infinity(), in_regime};
  return {-std::log1p(-x) / std::numbers::ln2, in_regime};
}

double long_time_lower_bound(std::size_t n, std::size_t n_a, double rt) {
  if (n < 2 || n_a == 0 || n_a >= n) {
    throw PreconditionError("long_time_lower_bound: need 0 < N_A < N");
  }
  const int na = static_cast<int>(n_a);
  const int nb = static_cast<int>(n - n_a);
  const int nn = static_cast<int>(n);
  const double x = std::ldexp(1.0, -na) + std::ldexp(1.0, -nb) - std::ldexp(1.0, -nn) +
                   static_cast<double>(n_a) * static_cast<double>(n - n_a) *
                       std::ldexp(1.0, -nn) * std::exp(-rt / static_cast<double>(n - 1));
  return -std::log2(x);
}

AlphaResult analytic_alpha(const BoltzmannConfig& cfg) {
  cfg.validate();
  const double sigma = cfg.sigma();
  const double gamma = cfg.coupling;
  const double d2 = cfg.diameter * cfg.diameter;
  AlphaResult out;
  out.closed = 0.25 * cfg.density * std::sqrt(std::numbers::pi) * d2 * gamma * gamma / sigma;
  out.in_regime = gamma / sigma < 1.0;

  // Integrate in u = v / (2σ): v³ e^{-v²/4σ²} dv = 16 σ⁴ u³ e^{-u²} du.
  // Outside [1e-30, 40] the integrand is below 1e-90 but its factors
  // overflow.
  auto integrand = [&](double u) {
    if (u <= 1e-30 || u >= 40.0) return 0.0;
    const double s = std::sin(gamma / (4.0 * sigma * u));
    return u * u * u * std::exp(-u * u) * s * s;
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  const double integral = 16.0 * std::pow(sigma, 4) * integrator.integrate(integrand);
  const double prefactor = 4.0 * std::numbers::pi * std::numbers::pi * d2 * cfg.density *
                           std::pow(4.0 * std::numbers::pi * sigma * sigma, -1.5);
  out.quadrature = prefactor * integral;
  return out;
}

double small_phase_entropy_slope(const BoltzmannConfig& cfg, std::size_t n_a) {
  const std::size_t n = cfg.particles;
  if (n_a == 0 || n_a >= n) throw PreconditionError("small_phase_entropy_slope: need 0 < N_A < N");
  return analytic_alpha(cfg).quadrature * static_cast<double>(n_a) *
         static_cast<double>(n - n_a) / (2.0 * std::numbers::ln2 * static_cast<double>(n - 1));
}

DecoherenceTimes decoherence_times(double delta_phi, double delta_t) {
  if (!(delta_phi > 0.0 && delta_phi < std::numbers::pi)) {
    throw PreconditionError("decoherence_times: delta_phi must lie in (0, pi)");
  }
  if (!(delta_t > 0.0)) throw PreconditionError("decoherence_times: delta_t must be positive");
  return {8.0 * delta_t / (delta_phi * delta_phi), 2.0 * delta_t / delta_phi};
}

}  // namespace spingas
