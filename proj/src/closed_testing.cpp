#include "tdg/closed_testing.hpp"

#include <algorithm>
#include <bit>
#include <limits>

namespace tdg {

namespace {

int popcount(std::uint64_t x) { return std::popcount(x); }

void check_oracle_scale(const IndexSet& I, const char* who) {
  if (I.size() > ClosedTestingOracle::kMaxFamilySize) {
    throw std::invalid_argument(std::string(who) + ": family exceeds " +
                                std::to_string(ClosedTestingOracle::kMaxFamilySize) +
                                " hypotheses");
  }
}

}  // namespace

LocalTestSuite make_suite(const CriticalValueFamily& fam, PValueVector p,
                          std::string description) {
  LocalTestSuite suite;
  suite.description = std::move(description);
  suite.test = [fam, p = std::move(p)](const IndexSet& S) {
    return local_test(fam, p, S);
  };
  return suite;
}

LocalTestSuite bonferroni_suite(PValueVector p, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::domain_error("bonferroni_suite: alpha must lie in (0,1)");
  }
  LocalTestSuite suite;
  suite.description = "bonferroni";
  suite.test = [p = std::move(p), alpha](const IndexSet& S) {
    if (S.empty()) return 0;
    double thr = alpha / S.size();
    for (int id : S) {
      if (p.at(id) <= thr) return 1;
    }
    return 0;
  };
  return suite;
}

ClosedTestingOracle::ClosedTestingOracle(const LocalTestSuite& suite, IndexSet family)
    : family_(std::move(family)) {
  check_oracle_scale(family_, "ClosedTestingOracle");
  if (!suite.test) throw std::invalid_argument("ClosedTestingOracle: empty suite");
  const std::uint64_t full = std::uint64_t{1} << family_.size();
  phi_.resize(full);
  eff_.resize(full);
  phi_[0] = 0;
  for (std::uint64_t mask = 1; mask < full; ++mask) {
    int v = suite.test(IndexSet::from_mask(mask, family_));
    if (v != 0 && v != 1) {
      throw std::invalid_argument("ClosedTestingOracle: local test must return 0 or 1");
    }
    phi_[mask] = static_cast<std::uint8_t>(v);
  }
  // mask | bit > mask, so a single descending sweep sees every superset first.
  for (std::uint64_t mask = full; mask-- > 0;) {
    std::uint8_t e = phi_[mask];
    for (int j = 0; e != 0 && j < family_.size(); ++j) {
      std::uint64_t bit = std::uint64_t{1} << j;
      if (!(mask & bit)) e = std::min(e, eff_[mask | bit]);
    }
    eff_[mask] = e;
  }
  for (std::uint64_t mask = 0; mask < full; ++mask) {
    if (phi_[mask] == 0) accepted_.push_back(mask);
  }
}

int ClosedTestingOracle::effective_by_mask(std::uint64_t mask) const {
  if (mask >= eff_.size()) {
    throw std::domain_error("ClosedTestingOracle: mask out of range");
  }
  return eff_[mask];
}

int ClosedTestingOracle::d_by_mask(std::uint64_t mask) const {
  if (mask >= eff_.size()) {
    throw std::domain_error("ClosedTestingOracle: mask out of range");
  }
  int best = std::numeric_limits<int>::max();
  std::uint64_t U = mask;
  while (true) {
    if (eff_[U] == 0) best = std::min(best, popcount(mask & ~U));
    if (U == 0) break;
    U = (U - 1) & mask;
  }
  return best;  // eff_[0] = 0, so best <= |S| always holds
}

int ClosedTestingOracle::g_by_mask(std::uint64_t mask) const {
  if (mask >= eff_.size()) {
    throw std::domain_error("ClosedTestingOracle: mask out of range");
  }
  int best = std::numeric_limits<int>::max();
  for (std::uint64_t V : accepted_) best = std::min(best, popcount(mask & ~V));
  return best;
}

int ClosedTestingOracle::effective_local_test(const IndexSet& S) const {
  return effective_by_mask(S.mask_in(family_));
}

int ClosedTestingOracle::d(const IndexSet& S) const { return d_by_mask(S.mask_in(family_)); }

int ClosedTestingOracle::g(const IndexSet& S) const { return g_by_mask(S.mask_in(family_)); }

DiscoveryProcedure ClosedTestingOracle::procedure() const {
  // Copy the d table so the procedure outlives the oracle.
  std::vector<int> table(eff_.size());
  for (std::uint64_t mask = 0; mask < eff_.size(); ++mask) {
    table[mask] = d_by_mask(mask);
  }
  IndexSet fam = family_;
  return DiscoveryProcedure(
      fam, [fam, table = std::move(table)](const IndexSet& S) {
        return table[S.mask_in(fam)];
      });
}

int effective_local_test(const LocalTestSuite& suite, const IndexSet& I, const IndexSet& S) {
  check_oracle_scale(I, "effective_local_test");
  if (!S.subset_of(I)) {
    throw std::domain_error("effective_local_test: S is not a subset of I");
  }
  std::uint64_t s = S.mask_in(I);
  std::uint64_t rest = (std::uint64_t{1} << I.size()) - 1 - s;
  // U = S union T over all T subseteq I \ S.
  std::uint64_t T = rest;
  while (true) {
    IndexSet U = IndexSet::from_mask(s | T, I);
    if (U.empty() || suite.test(U) == 0) return 0;
    if (T == 0) break;
    T = (T - 1) & rest;
  }
  return 1;
}

int brute_force_d(const LocalTestSuite& suite, const IndexSet& I, const IndexSet& S) {
  check_oracle_scale(I, "brute_force_d");
  if (!S.subset_of(I)) throw std::domain_error("brute_force_d: S is not a subset of I");
  std::uint64_t s = S.mask_in(I);
  int best = std::numeric_limits<int>::max();
  std::uint64_t U = s;
  while (true) {
    if (effective_local_test(suite, I, IndexSet::from_mask(U, I)) == 0) {
      best = std::min(best, popcount(s & ~U));
    }
    if (U == 0) break;
    U = (U - 1) & s;
  }
  return best;  // the empty set is always accepted
}

int brute_force_g(const LocalTestSuite& suite, const IndexSet& I, const IndexSet& S) {
  check_oracle_scale(I, "brute_force_g");
  if (!S.subset_of(I)) throw std::domain_error("brute_force_g: S is not a subset of I");
  std::uint64_t s = S.mask_in(I);
  const std::uint64_t full = std::uint64_t{1} << I.size();
  int best = std::numeric_limits<int>::max();
  for (std::uint64_t V = 0; V < full; ++V) {
    IndexSet Vs = IndexSet::from_mask(V, I);
    if (Vs.empty() || suite.test(Vs) == 0) best = std::min(best, popcount(s & ~V));
  }
  return best;
}

ShortcutState shortcut_state_from_sorted(const CriticalValueFamily& fam,
                                         std::vector<double> sorted_p) {
  if (!std::is_sorted(sorted_p.begin(), sorted_p.end())) {
    throw std::invalid_argument("shortcut_state_from_sorted: p-values not sorted");
  }
  ShortcutState state{fam, std::move(sorted_p), 0};
  const int m = static_cast<int>(state.sorted_p.size());
  // Largest n whose n largest p-values all clear their row-n thresholds.
  for (int n = m; n >= 1; --n) {
    bool ok = true;
    for (int i = 1; i <= n; ++i) {
      if (state.sorted_p[static_cast<std::size_t>(m - n + i - 1)] <= fam.threshold(i, n)) {
        ok = false;
        break;
      }
    }
    if (ok) {
      state.h = n;
      break;
    }
  }
  return state;
}

ShortcutState compute_shortcut_state(const CriticalValueFamily& fam, const PValueVector& p) {
  std::vector<double> sp = p.values();
  std::sort(sp.begin(), sp.end());
  return shortcut_state_from_sorted(fam, std::move(sp));
}

int shortcut_d(const ShortcutState& state, const PValueVector& p, const IndexSet& S) {
  if (S.empty()) return 0;
  std::vector<double> ps;
  ps.reserve(static_cast<std::size_t>(S.size()));
  for (int id : S) ps.push_back(p.at(id));
  std::sort(ps.begin(), ps.end());
  int best = 0;
  for (int u = 1; u <= S.size(); ++u) {
    double thr = state.fam.threshold(u, state.h);
    int cnt = static_cast<int>(std::upper_bound(ps.begin(), ps.end(), thr) - ps.begin());
    best = std::max(best, 1 - u + cnt);
  }
  return best;
}

int shortcut_d_reference(const ShortcutState& state, const PValueVector& p,
                         const IndexSet& S) {
  int best = 0;
  for (int u = 1; u <= S.size(); ++u) {
    double thr = state.fam.threshold(u, state.h);
    int cnt = 0;
    for (int id : S) {
      if (p.at(id) <= thr) ++cnt;
    }
    best = std::max(best, 1 - u + cnt);
  }
  return best;
}

DiscoveryProcedure shortcut_procedure(const CriticalValueFamily& fam, const PValueVector& p) {
  auto state = std::make_shared<ShortcutState>(compute_shortcut_state(fam, p));
  auto pv = std::make_shared<PValueVector>(p);
  IndexSet family = IndexSet::range(p.size());
  return DiscoveryProcedure(family, [state, pv](const IndexSet& S) {
    return shortcut_d(*state, *pv, S);
  });
}

IndexSet fwer_rejections(const DiscoveryProcedure& d) {
  std::vector<int> out;
  for (int id : d.family()) {
    if (d.bound(IndexSet({id})) >= 1) out.push_back(id);
  }
  return IndexSet(std::move(out));
}

bool is_consonant(const DiscoveryProcedure& d) {
  check_oracle_scale(d.family(), "is_consonant");
  const IndexSet& I = d.family();
  const std::uint64_t full = std::uint64_t{1} << I.size();
  std::uint64_t r = fwer_rejections(d).mask_in(I);

  std::vector<int> table(full);
  for (std::uint64_t mask = 0; mask < full; ++mask) {
    table[mask] = d.bound(IndexSet::from_mask(mask, I));
  }
  bool consonant = true;
  for (std::uint64_t mask = 1; mask < full; ++mask) {
    if (table[mask] > 0 && (mask & r) == 0) {
      consonant = false;
      break;
    }
  }

  // For coherent d, consonance is equivalent to additivity over the
  // rejection set: d(S) = |S intersect R|. Cross-check when affordable.
  if (I.size() <= 12) {
    bool coherent = true;
    for (std::uint64_t v = 0; coherent && v < full; ++v) {
      std::uint64_t rest = (full - 1) & ~v;
      std::uint64_t w = rest;
      while (true) {
        std::uint64_t uw = v | w;
        if (table[v] + table[w] > table[uw] || table[uw] > table[v] + popcount(w)) {
          coherent = false;
          break;
        }
        if (w == 0) break;
        w = (w - 1) & rest;
      }
    }
    if (coherent) {
      bool additive = true;
      for (std::uint64_t mask = 0; mask < full; ++mask) {
        if (table[mask] != popcount(mask & r)) {
          additive = false;
          break;
        }
      }
      if (additive != consonant) {
        throw std::logic_error("is_consonant: additivity cross-check disagreement");
      }
    }
  }
  return consonant;
}

DiscoveryProcedure fwer_projection(const DiscoveryProcedure& d) {
  IndexSet R = fwer_rejections(d);
  return DiscoveryProcedure(
      d.family(),
      [R](const IndexSet& S) { return intersection_size(S, R); },
      KFwerShape{R, 1});
}

}  // namespace tdg
