#include "spingas/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spingas/errors.hpp"

namespace spingas {

const SeriesRow& EnsembleSeries::at_time(double t) const {
  for (const SeriesRow& row : rows) {
    if (std::abs(row.t - t) <= 1e-9 * std::max(1.0, std::abs(t))) return row;
  }
  throw PreconditionError("series " + observable + " has no row at t = " + std::to_string(t));
}

SeriesAccumulator::SeriesAccumulator(std::vector<double> times)
    : times_(std::move(times)),
      sum_(times_.size(), 0.0),
      sum_sq_(times_.size(), 0.0),
      count_(times_.size(), 0) {}

void SeriesAccumulator::add(std::size_t row, double value) {
  sum_.at(row) += value;
  sum_sq_[row] += value * value;
  ++count_[row];
}

EnsembleSeries SeriesAccumulator::finish(std::string observable) const {
  EnsembleSeries out{std::move(observable), {}};
  out.rows.reserve(times_.size());
  for (std::size_t i = 0; i < times_.size(); ++i) {
    SeriesRow row;
    row.t = times_[i];
    row.n = count_[i];
    if (row.n > 0) {
      const double n = static_cast<double>(row.n);
      row.mean = sum_[i] / n;
      if (row.n > 1) {
        const double var = std::max(0.0, (sum_sq_[i] - sum_[i] * row.mean) / (n - 1.0));
        row.std_error = std::sqrt(var / n);
      }
    }
    out.rows.push_back(row);
  }
  std::stable_sort(out.rows.begin(), out.rows.end(),
                   [](const SeriesRow& a, const SeriesRow& b) { return a.t < b.t; });
  return out;
}

SeriesRow summarize(const std::vector<double>& values, double t) {
  SeriesAccumulator acc({t});
  for (double v : values) acc.add(0, v);
  return acc.finish("").rows.front();
}

JackknifeResult jackknife(const std::vector<std::vector<double>>& samples,
                          const std::function<double(const std::vector<double>&)>& statistic) {
  if (samples.empty()) throw PreconditionError("jackknife: empty sample");
  const std::size_t n = samples.size();
  const std::size_t width = samples.front().size();
  std::vector<double> total(width, 0.0);
  for (const auto& s : samples) {
    if (s.size() != width) throw PreconditionError("jackknife: ragged sample");
    for (std::size_t j = 0; j < width; ++j) total[j] += s[j];
  }
  std::vector<double> mean(width);
  for (std::size_t j = 0; j < width; ++j) mean[j] = total[j] / static_cast<double>(n);
  JackknifeResult out{statistic(mean), 0.0};
  if (n < 2) return out;

  std::vector<double> leave_out(n);
  std::vector<double> partial(width);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      partial[j] = (total[j] - samples[i][j]) / static_cast<double>(n - 1);
    }
    leave_out[i] = statistic(partial);
  }
  double avg = 0.0;
  for (double v : leave_out) avg += v;
  avg /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : leave_out) ss += (v - avg) * (v - avg);
  out.std_error = std::sqrt(ss * static_cast<double>(n - 1) / static_cast<double>(n));
  return out;
}

std::size_t resolve_workers(std::size_t requested, std::size_t jobs) {
  std::size_t pool = requested;
  if (pool == 0) pool = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(pool, jobs));
}

}  // namespace spingas
