#pragma once

#include <cstdint>

#include "tdg/local_tests.hpp"

namespace tdg {

/// Monte Carlo determination of the admissible constants c_m and empirical
/// size / alpha-exhaustion diagnostics. All routines are deterministic given
/// (alpha, m, samples, seed) and independent of the thread count: work is cut
/// into fixed batches with streams derived from (seed, batch) and merged in
/// batch order.

struct CalibrationResult {
  double alpha = 0.0;
  int m = 0;
  double c_m = 0.0;
  double standard_error = 0.0;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
};

/// Fraction of iid-uniform p-vectors of length m on which the local test
/// fires. threads = 0 means hardware concurrency.
double estimate_size(const CriticalValueFamily& fam, int m, std::int64_t samples,
                     std::uint64_t seed, int threads = 0);

/// Smallest c (to tolerance tol) with estimated size <= alpha for the
/// threshold family l_{i:m} = (i - c)/(mc). Bisection on [c_1, c] over a
/// shared sample of the statistic t = max_i i/(1 + m u_(i)), whose upper tail
/// probability at c is exactly the size; common random numbers make the curve
/// monotone sample-wise. The standard error comes from 10 batch quantiles.
CalibrationResult calibrate_cm(double alpha, int m, std::int64_t samples,
                               std::uint64_t seed, double tol = 1e-4, int threads = 0);

/// alpha - estimate_size(...); a gap statistically above 0 flags an
/// improvable (inadmissible) local test.
double exhaustion_gap(const CriticalValueFamily& fam, int m, std::int64_t samples,
                      std::uint64_t seed, int threads = 0);

}  // namespace tdg
