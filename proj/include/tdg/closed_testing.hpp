#pragma once

#include <string>
#include <vector>

#include "tdg/core.hpp"
#include "tdg/local_tests.hpp"

namespace tdg {

/// A suite of local tests phi_S for the intersection hypotheses H_S.
/// phi_empty = 0 is enforced by the evaluation wrappers below.
struct LocalTestSuite {
  std::function<int(const IndexSet&)> test;
  std::string description;
};

LocalTestSuite make_suite(const CriticalValueFamily& fam, PValueVector p,
                          std::string description = {});
LocalTestSuite bonferroni_suite(PValueVector p, double alpha);

/// Exhaustive closed testing over the full subset lattice of a family.
/// Precomputes phi and the effective tests phi^I for all 2^|I| subsets;
/// hard cap |I| <= 20.
class ClosedTestingOracle {
 public:
  static constexpr int kMaxFamilySize = 20;

  ClosedTestingOracle(const LocalTestSuite& suite, IndexSet family);

  const IndexSet& family() const { return family_; }

  /// phi_S^I = min{phi_U : S subseteq U subseteq I}
  int effective_local_test(const IndexSet& S) const;
  /// d_phi(S) = min{|S\U| : U subseteq S, phi_U^I = 0}
  int d(const IndexSet& S) const;
  /// g_phi(S) = min{|S\V| : V subseteq I, phi_V = 0}
  int g(const IndexSet& S) const;

  int effective_by_mask(std::uint64_t mask) const;
  int d_by_mask(std::uint64_t mask) const;
  int g_by_mask(std::uint64_t mask) const;

  /// The procedure S -> d(S) as an extensional table.
  DiscoveryProcedure procedure() const;

 private:
  IndexSet family_;
  std::vector<std::uint8_t> phi_;
  std::vector<std::uint8_t> eff_;
  std::vector<std::uint64_t> accepted_;  // masks with phi = 0
};

int effective_local_test(const LocalTestSuite& suite, const IndexSet& I, const IndexSet& S);
int brute_force_d(const LocalTestSuite& suite, const IndexSet& I, const IndexSet& S);
int brute_force_g(const LocalTestSuite& suite, const IndexSet& I, const IndexSet& S);

/// Sorted p-values of the family plus the h statistic: the largest n such
/// that the n largest p-values jointly survive their thresholds,
/// p_(|I|-n+i:I) > l_{i:n} for i = 1..n (vacuous at n = 0).
struct ShortcutState {
  CriticalValueFamily fam;
  std::vector<double> sorted_p;
  int h = 0;
};

ShortcutState compute_shortcut_state(const CriticalValueFamily& fam, const PValueVector& p);
ShortcutState shortcut_state_from_sorted(const CriticalValueFamily& fam,
                                         std::vector<double> sorted_p);

/// d(S) = max_{1<=u<=|S|} 1 - u + |{i in S : p_i <= l_{u:h}}|, clamped at 0.
/// O(|S| log |S|) per query. Equals brute_force_d for the same suite.
int shortcut_d(const ShortcutState& state, const PValueVector& p, const IndexSet& S);

/// Direct double-loop evaluation, kept as the reference path.
int shortcut_d_reference(const ShortcutState& state, const PValueVector& p, const IndexSet& S);

/// Intensional procedure answering queries through a shared ShortcutState.
DiscoveryProcedure shortcut_procedure(const CriticalValueFamily& fam, const PValueVector& p);

/// {i in family : d({i}) = 1}
IndexSet fwer_rejections(const DiscoveryProcedure& d);

/// 1 iff every S with d(S) > 0 contains an i with d({i}) = 1. For coherent d
/// at small scale this is cross-checked against the equivalent additive form
/// d(S) = |S intersect fwer_rejections(d)|. Oracle scale only.
bool is_consonant(const DiscoveryProcedure& d);

/// S -> |S intersect fwer_rejections(d)|
DiscoveryProcedure fwer_projection(const DiscoveryProcedure& d);

}  // namespace tdg
