#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace spingas {

struct SeriesRow {
  double t = 0.0;
  double mean = 0.0;
  double std_error = 0.0;  ///< sample standard deviation / √n; 0 when n < 2
  std::size_t n = 0;
};

struct EnsembleSeries {
  std::string observable;
  std::vector<SeriesRow> rows;

  const SeriesRow& at_time(double t) const;
};

/// Sums per time row. Values are added in realization order by the caller,
/// so results do not depend on how realizations were scheduled.
class SeriesAccumulator {
 public:
  explicit SeriesAccumulator(std::vector<double> times);

  void add(std::size_t row, double value);
  std::size_t size() const noexcept { return times_.size(); }

  EnsembleSeries finish(std::string observable) const;

 private:
  std::vector<double> times_;
  std::vector<double> sum_;
  std::vector<double> sum_sq_;
  std::vector<std::size_t> count_;
};

/// Mean and standard error of a sample.
SeriesRow summarize(const std::vector<double>& values, double t = 0.0);

struct JackknifeResult {
  double value = 0.0;
  double std_error = 0.0;
};

/// Leave-one-out jackknife for a smooth function of a mean vector.
/// `samples[i]` is realization i's vector; `statistic` maps a mean vector
/// to a scalar. Returns the full-sample value and its standard error.
JackknifeResult jackknife(const std::vector<std::vector<double>>& samples,
                          const std::function<double(const std::vector<double>&)>& statistic);

struct EnsembleOptions {
  std::size_t ensemble = 1;
  std::uint64_t seed = 0;
  std::size_t workers = 1;  ///< 0 picks hardware concurrency
};

std::size_t resolve_workers(std::size_t requested, std::size_t jobs);

/// Evaluates fn(i) for i in [0, count) on a bounded pool and returns the
/// results indexed by i. The first exception thrown by any job is rethrown.
template <class Result, class Fn>
std::vector<Result> map_realizations(std::size_t count, std::size_t workers, Fn&& fn) {
  std::vector<Result> results(count);
  const std::size_t pool = resolve_workers(workers, count);
  if (pool <= 1) {
    for (std::size_t i = 0; i < count; ++i) results[i] = fn(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        results[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(pool);
  for (std::size_t w = 0; w < pool; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace spingas
