#include "tdg/calibration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "tdg/rng.hpp"

namespace tdg {

namespace {

constexpr int kBatches = 10;

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn(batch, batch_samples) for the 10 fixed batches on up to `threads`
/// workers; results land in batch order, so the merge is deterministic.
template <typename T, typename Fn>
std::vector<T> run_batches(std::int64_t samples, int threads, Fn&& fn) {
  std::vector<T> results(kBatches);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int b = next.fetch_add(1); b < kBatches; b = next.fetch_add(1)) {
      std::int64_t n = samples / kBatches + (b < samples % kBatches ? 1 : 0);
      results[static_cast<std::size_t>(b)] = fn(b, n);
    }
  };
  int nthreads = std::min(resolve_threads(threads), kBatches);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return results;
}

void check_sampling_args(int m, std::int64_t samples) {
  if (m < 1) throw std::domain_error("calibration: m must be >= 1");
  if (samples < 1) throw std::domain_error("calibration: samples must be >= 1");
}

/// t = max_i i / (1 + m u_(i)). The threshold test with constant c fires on
/// a sample iff t >= c, so P(t >= c) is the size at c.
double t_statistic(std::vector<double>& u) {
  std::sort(u.begin(), u.end());
  const double m = static_cast<double>(u.size());
  double t = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    t = std::max(t, static_cast<double>(i + 1) / (1.0 + m * u[i]));
  }
  return t;
}

}  // namespace

double estimate_size(const CriticalValueFamily& fam, int m, std::int64_t samples,
                     std::uint64_t seed, int threads) {
  check_sampling_args(m, samples);
  auto counts = run_batches<std::int64_t>(samples, threads, [&](int b, std::int64_t n) {
    CounterRng rng(seed, static_cast<std::uint64_t>(b));
    std::vector<double> u(static_cast<std::size_t>(m));
    std::int64_t hits = 0;
    for (std::int64_t s = 0; s < n; ++s) {
      for (auto& v : u) v = rng.next_uniform();
      std::sort(u.begin(), u.end());
      hits += local_test_sorted(fam, u);
    }
    return hits;
  });
  std::int64_t total = 0;
  for (std::int64_t c : counts) total += c;
  return static_cast<double>(total) / static_cast<double>(samples);
}

CalibrationResult calibrate_cm(double alpha, int m, std::int64_t samples,
                               std::uint64_t seed, double tol, int threads) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::domain_error("calibrate_cm: alpha must lie in (0,1)");
  }
  check_sampling_args(m, samples);
  if (!(tol > 0.0)) throw std::domain_error("calibrate_cm: tol must be positive");

  auto batches = run_batches<std::vector<double>>(samples, threads,
                                                  [&](int b, std::int64_t n) {
    CounterRng rng(seed, static_cast<std::uint64_t>(b));
    std::vector<double> u(static_cast<std::size_t>(m));
    std::vector<double> ts;
    ts.reserve(static_cast<std::size_t>(n));
    for (std::int64_t s = 0; s < n; ++s) {
      for (auto& v : u) v = rng.next_uniform();
      ts.push_back(t_statistic(u));
    }
    return ts;
  });

  // Per-batch quantile estimates for the standard error.
  std::vector<double> batch_c;
  for (auto& ts : batches) {
    std::vector<double> sorted = ts;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    auto k = static_cast<std::size_t>(alpha * static_cast<double>(sorted.size()));
    batch_c.push_back(k < sorted.size() ? sorted[k] : kr_c1(alpha));
  }
  double mean = 0.0;
  for (double c : batch_c) mean += c;
  mean /= batch_c.size();
  double var = 0.0;
  for (double c : batch_c) var += (c - mean) * (c - mean);
  var /= static_cast<double>(batch_c.size() - 1);
  double se = std::sqrt(var / static_cast<double>(batch_c.size()));

  std::vector<double> t_all;
  t_all.reserve(static_cast<std::size_t>(samples));
  for (auto& ts : batches) t_all.insert(t_all.end(), ts.begin(), ts.end());
  std::sort(t_all.begin(), t_all.end());

  auto size_at = [&](double c) {
    // fraction of samples with t >= c
    auto it = std::lower_bound(t_all.begin(), t_all.end(), c);
    return static_cast<double>(t_all.end() - it) / static_cast<double>(samples);
  };

  double lo = kr_c1(alpha);
  double hi = alpha <= 0.31 ? kr_c_constant(alpha) : static_cast<double>(m) + 1.0;
  const double slack = 1e-12;
  if (size_at(hi) > alpha + slack) {
    throw std::runtime_error("calibrate_cm: bracket failure on [" + std::to_string(lo) +
                             ", " + std::to_string(hi) + "]: size at upper endpoint " +
                             std::to_string(size_at(hi)) + " exceeds alpha");
  }
  if (size_at(lo) <= alpha + slack) {
    hi = lo;  // c_1 already controls size on this sample
  }
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (size_at(mid) <= alpha + slack) hi = mid;
    else lo = mid;
  }

  CalibrationResult res;
  res.alpha = alpha;
  res.m = m;
  res.c_m = hi;
  res.standard_error = se;
  res.samples = samples;
  res.seed = seed;
  return res;
}

double exhaustion_gap(const CriticalValueFamily& fam, int m, std::int64_t samples,
                      std::uint64_t seed, int threads) {
  return fam.alpha() - estimate_size(fam, m, samples, seed, threads);
}

}  // namespace tdg
