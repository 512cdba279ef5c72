#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tdg/core.hpp"

namespace tdg {

/// The step-up constant c = -log(alpha) / log(1 - log(alpha)).
/// Only valid for alpha in (0, 0.31].
double kr_c_constant(double alpha);

/// Exact small-m admissible constants: c_1 = 1/(1+alpha) and
/// c_2 = 2/(1+2*sqrt(alpha)), from P(U_(2) <= t) = t^2 = alpha.
double kr_c1(double alpha);
double kr_c2(double alpha);

enum class FamilyKind { Simes, KrOriginal, KrAdmissible, Custom };

/// A Simes-like critical value family l_{i:n}. Conventions: l_{i:0} = 1 and
/// l_{i:n} = l_{i:i} for i > n != 0. Thresholds may be negative, in which
/// case the comparison p <= l never fires; no clamping is applied.
class CriticalValueFamily {
 public:
  static CriticalValueFamily simes(double alpha);
  static CriticalValueFamily kr_original(double alpha);
  /// Uses the built-in calibrated c_m table (alpha = 0.05); c_1 and c_2 are
  /// analytic for any alpha. Other alphas need a user-supplied table from
  /// the calibration module.
  static CriticalValueFamily kr_admissible(double alpha);
  static CriticalValueFamily kr_admissible(double alpha,
                                           std::vector<std::pair<int, double>> c_table);
  /// rows[n-1] holds l_{1:n}..l_{n:n}; extra cells beyond column n are
  /// ignored (the extension conventions override them).
  static CriticalValueFamily custom(std::vector<std::vector<double>> rows, double alpha);
  static CriticalValueFamily custom_from_csv(const std::string& path, double alpha);

  FamilyKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double threshold(int i, int n) const;

  /// The constant used at scale n (KrOriginal: c; KrAdmissible: c_n).
  double c_value(int n) const;
  /// Largest n the family can serve (INT_MAX for analytic families).
  int max_scale() const;

 private:
  CriticalValueFamily() = default;

  FamilyKind kind_ = FamilyKind::Simes;
  double alpha_ = 0.05;
  double c_ = 0.0;                                  // KrOriginal
  std::vector<std::pair<int, double>> c_table_;     // KrAdmissible, sorted by m
  std::vector<std::vector<double>> rows_;           // Custom
};

/// phi_S = 1 iff p_(i:S) <= l_{i:|S|} for at least one i. phi_empty = 0.
int local_test(const CriticalValueFamily& fam, const PValueVector& p, const IndexSet& S);

/// Same test on an already-sorted vector of the p-values of S.
int local_test_sorted(const CriticalValueFamily& fam, const std::vector<double>& sorted_p);

/// Fixed-sequence test levels alpha_1 = alpha, alpha_{i+1} = alpha_i / P(alpha_i),
/// truncated at 1. P is the per-test power cap, x <= P(x) <= 1.
struct AlphaSchedule {
  std::vector<double> levels;
};

AlphaSchedule fixed_sequence_schedule(double alpha,
                                      const std::function<double(double)>& power_cap,
                                      int steps);

}  // namespace tdg
