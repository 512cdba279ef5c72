#include "tdg/procedures.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>

namespace tdg {

namespace {

int popcount(std::uint64_t x) { return std::popcount(x); }

void check_scale(const IndexSet& I, int cap, const char* who) {
  if (I.size() > cap) {
    throw std::invalid_argument(std::string(who) + ": oracle scale only (|I| <= " +
                                std::to_string(cap) + ")");
  }
}

/// Procedure nonzero only on K, with the equivalent k-FWER tag
/// (k = |K| - v + 1) so interpolation has a closed form.
DiscoveryProcedure single_set_adapter(const IndexSet& K, int v, const IndexSet& I) {
  if (!K.subset_of(I)) {
    throw std::domain_error("adapter: reported set is not a subset of the family");
  }
  v = std::clamp(v, 0, K.size());
  return DiscoveryProcedure(
      I, [K, v](const IndexSet& S) { return S == K ? v : 0; },
      KFwerShape{K, K.size() - v + 1});
}

DiscoveryProcedure table_adapter(std::map<std::vector<int>, int> table, const IndexSet& I) {
  return DiscoveryProcedure(I, [table = std::move(table)](const IndexSet& S) {
    auto it = table.find(S.ids());
    return it == table.end() ? 0 : it->second;
  });
}

/// d_bar(S) = 0 v max_j ceil(j - c (1 + m p_(j:S))), the coherent KR bound.
int kr_coherent_bound(const PValueVector& p, double c, const IndexSet& S) {
  std::vector<double> ps;
  ps.reserve(static_cast<std::size_t>(S.size()));
  for (int id : S) ps.push_back(p.at(id));
  std::sort(ps.begin(), ps.end());
  const double m = static_cast<double>(p.size());
  int best = 0;
  for (int j = 1; j <= S.size(); ++j) {
    double v = j - c * (1.0 + m * ps[static_cast<std::size_t>(j - 1)]);
    best = std::max(best, static_cast<int>(std::ceil(v)));
  }
  return best;
}

DiscoveryProcedure kr_shape_procedure(std::shared_ptr<const PValueVector> p, double alpha,
                                      double c, DiscoveryProcedure::BoundFn fn) {
  IndexSet family = IndexSet::range(p->size());
  return DiscoveryProcedure(std::move(family), std::move(fn),
                            KrShape{std::move(p), alpha, c});
}

/// Ids ordered by (p-value, id); ties broken by id for reproducibility.
std::vector<int> p_order(const PValueVector& p) {
  std::vector<int> order(static_cast<std::size_t>(p.size()));
  std::iota(order.begin(), order.end(), 1);
  std::stable_sort(order.begin(), order.end(),
                   [&p](int a, int b) { return p.at(a) < p.at(b); });
  return order;
}

}  // namespace

DiscoveryProcedure adapt_kfwer(const IndexSet& K, int k, const IndexSet& I) {
  if (k < 1) throw std::domain_error("adapt_kfwer: k must be >= 1");
  return single_set_adapter(K, K.size() - k + 1, I);
}

DiscoveryProcedure adapt_fdx(const IndexSet& K, double gamma, const IndexSet& I) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::domain_error("adapt_fdx: gamma must lie in [0,1]");
  }
  int v = static_cast<int>(std::ceil((1.0 - gamma) * K.size() - 1e-12));
  return single_set_adapter(K, v, I);
}

DiscoveryProcedure adapt_jer(const std::vector<std::pair<IndexSet, int>>& sets,
                             const IndexSet& I) {
  std::map<std::vector<int>, int> table;
  for (const auto& [K, k] : sets) {
    if (k < 1) throw std::invalid_argument("adapt_jer: k_i must be >= 1");
    if (!K.subset_of(I)) {
      throw std::domain_error("adapt_jer: K_i is not a subset of the family");
    }
    if (!table.emplace(K.ids(), std::clamp(K.size() - k + 1, 0, K.size())).second) {
      throw std::invalid_argument("adapt_jer: duplicate reported set");
    }
  }
  return table_adapter(std::move(table), I);
}

DiscoveryProcedure adapt_intersection_fwer(
    const std::vector<std::pair<IndexSet, int>>& sets, const IndexSet& I) {
  std::map<std::vector<int>, int> table;
  for (const auto& [K, k] : sets) {
    if (k != 0 && k != 1) {
      throw std::invalid_argument("adapt_intersection_fwer: k_i must be 0 or 1");
    }
    if (!K.subset_of(I)) {
      throw std::domain_error("adapt_intersection_fwer: K_i is not a subset of the family");
    }
    if (!table.emplace(K.ids(), k).second) {
      throw std::invalid_argument("adapt_intersection_fwer: duplicate reported set");
    }
  }
  return table_adapter(std::move(table), I);
}

DiscoveryProcedure adapt_partial_conjunction(int delta, int k, const IndexSet& I) {
  if (delta != 0 && delta != 1) {
    throw std::domain_error("adapt_partial_conjunction: delta must be 0 or 1");
  }
  if (k < 0) throw std::domain_error("adapt_partial_conjunction: k must be >= 0");
  return single_set_adapter(I, delta * k, I);
}

DiscoveryProcedure adapt_pi0_interval(double u, const IndexSet& I) {
  if (!(u >= 0.0 && u <= 1.0)) {
    throw std::domain_error("adapt_pi0_interval: u must lie in [0,1]");
  }
  int v = static_cast<int>(std::ceil((1.0 - u) * I.size() - 1e-12));
  return single_set_adapter(I, v, I);
}

DiscoveryProcedure kr_original_procedure(const PValueVector& p, double alpha) {
  const double c = kr_c_constant(alpha);
  const int m = p.size();
  std::vector<int> order = p_order(p);
  std::vector<int> rank(static_cast<std::size_t>(m) + 1, 0);
  for (int i = 0; i < m; ++i) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;
  // value[i] = d(K_i) = i - floor(c (1 + m p_(i))), clamped at 0
  std::vector<int> value(static_cast<std::size_t>(m) + 1, 0);
  for (int i = 1; i <= m; ++i) {
    double pi = p.at(order[static_cast<std::size_t>(i - 1)]);
    int ki = static_cast<int>(std::floor(c * (1.0 + m * pi))) + 1;
    value[static_cast<std::size_t>(i)] = std::max(0, i - ki + 1);
  }
  auto pv = std::make_shared<const PValueVector>(p);
  auto fn = [rank = std::move(rank), value = std::move(value)](const IndexSet& S) {
    // S = K_|S| iff every member ranks among the |S| smallest p-values.
    for (int id : S) {
      if (rank[static_cast<std::size_t>(id)] >= S.size()) return 0;
    }
    return value[static_cast<std::size_t>(S.size())];
  };
  return kr_shape_procedure(std::move(pv), alpha, c, std::move(fn));
}

DiscoveryProcedure kr_coherent_procedure(const PValueVector& p, double alpha) {
  const double c = kr_c_constant(alpha);
  auto pv = std::make_shared<const PValueVector>(p);
  auto fn = [pv, c](const IndexSet& S) { return kr_coherent_bound(*pv, c, S); };
  return kr_shape_procedure(pv, alpha, c, std::move(fn));
}

DiscoveryProcedure kr_closed_procedure(const PValueVector& p, double alpha) {
  return shortcut_procedure(CriticalValueFamily::kr_original(alpha), p);
}

DiscoveryProcedure kr_admissible_procedure(const PValueVector& p, double alpha) {
  return shortcut_procedure(CriticalValueFamily::kr_admissible(alpha), p);
}

DiscoveryProcedure interpolate(const DiscoveryProcedure& d) {
  if (const auto* fs = std::get_if<KFwerShape>(&d.shape())) {
    IndexSet K = fs->reported;
    int k = fs->k;
    return DiscoveryProcedure(
        d.family(),
        [K, k](const IndexSet& S) { return std::max(0, intersection_size(S, K) - k + 1); },
        KFwerShape{K, k});
  }
  if (const auto* ks = std::get_if<KrShape>(&d.shape())) {
    auto pv = ks->p;
    double c = ks->c;
    auto fn = [pv, c](const IndexSet& S) { return kr_coherent_bound(*pv, c, S); };
    return kr_shape_procedure(pv, ks->alpha, c, std::move(fn));
  }

  check_scale(d.family(), ClosedTestingOracle::kMaxFamilySize, "interpolate");
  const IndexSet I = d.family();
  const std::uint64_t full = std::uint64_t{1} << I.size();
  std::vector<int> cur(full);
  for (std::uint64_t mask = 0; mask < full; ++mask) {
    cur[mask] = d.bound(IndexSet::from_mask(mask, I));
  }
  // One round of d_bar(S) = max_U { d(U) - |U\S| + d(S\U) } can create new
  // implications; iterate until the table stops changing.
  bool changed = true;
  std::vector<int> next(full);
  while (changed) {
    changed = false;
    for (std::uint64_t s = 0; s < full; ++s) {
      int best = cur[s];
      for (std::uint64_t u = 0; u < full; ++u) {
        best = std::max(best, cur[u] - popcount(u & ~s) + cur[s & ~u]);
      }
      next[s] = best;
      if (best != cur[s]) changed = true;
    }
    cur.swap(next);
  }
  return DiscoveryProcedure(I, [I, table = std::move(cur)](const IndexSet& S) {
    return table[S.mask_in(I)];
  });
}

bool is_coherent(const DiscoveryProcedure& d) {
  check_scale(d.family(), 16, "is_coherent");
  const IndexSet& I = d.family();
  const std::uint64_t full = std::uint64_t{1} << I.size();
  std::vector<int> table(full);
  for (std::uint64_t mask = 0; mask < full; ++mask) {
    table[mask] = d.bound(IndexSet::from_mask(mask, I));
  }
  for (std::uint64_t v = 0; v < full; ++v) {
    std::uint64_t rest = (full - 1) & ~v;
    std::uint64_t w = rest;
    while (true) {
      if (table[v] + table[w] > table[v | w] || table[v | w] > table[v] + popcount(w)) {
        return false;
      }
      if (w == 0) break;
      w = (w - 1) & rest;
    }
  }
  return true;
}

bool check_monotone_stack(const std::function<DiscoveryProcedure(const IndexSet&)>& builder,
                          const IndexSet& J) {
  check_scale(J, 12, "check_monotone_stack");
  DiscoveryProcedure outer = builder(J);
  const std::uint64_t full = std::uint64_t{1} << J.size();
  for (std::uint64_t i = 0; i < full; ++i) {
    IndexSet I = IndexSet::from_mask(i, J);
    DiscoveryProcedure inner = builder(I);
    std::uint64_t s = i;
    while (true) {
      IndexSet S = IndexSet::from_mask(s, J);
      if (inner.bound(S) < outer.bound(S)) return false;
      if (s == 0) break;
      s = (s - 1) & i;
    }
  }
  return true;
}

Dominance dominates(const DiscoveryProcedure& a, const DiscoveryProcedure& b) {
  if (a.family() != b.family()) {
    throw std::invalid_argument("dominates: procedures have different families");
  }
  check_scale(a.family(), ClosedTestingOracle::kMaxFamilySize, "dominates");
  const std::uint64_t full = std::uint64_t{1} << a.family().size();
  bool a_ge = true, b_ge = true;
  for (std::uint64_t mask = 0; mask < full; ++mask) {
    IndexSet S = IndexSet::from_mask(mask, a.family());
    int va = a.bound(S), vb = b.bound(S);
    if (va < vb) a_ge = false;
    if (vb < va) b_ge = false;
  }
  if (a_ge && b_ge) return Dominance::Equal;
  if (a_ge) return Dominance::ADominates;
  if (b_ge) return Dominance::BDominates;
  return Dominance::Incomparable;
}

int induce_local_test(const std::function<DiscoveryProcedure(const IndexSet&)>& builder,
                      const IndexSet& S) {
  if (S.empty()) return 0;
  return builder(S).bound(S) > 0 ? 1 : 0;
}

LocalTestSuite induced_suite(std::function<DiscoveryProcedure(const IndexSet&)> builder,
                             std::string description) {
  LocalTestSuite suite;
  suite.description = std::move(description);
  suite.test = [builder = std::move(builder)](const IndexSet& S) {
    return induce_local_test(builder, S);
  };
  return suite;
}

void save_procedure(const DiscoveryProcedure& d, const std::string& path) {
  check_scale(d.family(), ClosedTestingOracle::kMaxFamilySize, "save_procedure");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open procedure file for writing: " + path);
  out << "family";
  for (int id : d.family()) out << ' ' << id;
  out << '\n';
  const std::uint64_t full = std::uint64_t{1} << d.family().size();
  for (std::uint64_t mask = 1; mask < full; ++mask) {
    IndexSet S = IndexSet::from_mask(mask, d.family());
    int v = d.bound(S);
    if (v == 0) continue;
    bool first = true;
    for (int id : S) {
      out << (first ? "" : " ") << id;
      first = false;
    }
    out << " : " << v << '\n';
  }
  if (!out) throw IoError("write failure on procedure file: " + path);
}

DiscoveryProcedure load_procedure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open procedure file: " + path);
  std::string line;
  int lineno = 0;
  IndexSet family;
  bool have_family = false;
  std::map<std::vector<int>, int> table;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    if (!have_family) {
      std::string tag;
      ss >> tag;
      if (tag != "family") {
        throw std::invalid_argument("procedure file line " + std::to_string(lineno) +
                                    ": expected 'family' header");
      }
      std::vector<int> ids;
      int id;
      while (ss >> id) ids.push_back(id);
      family = IndexSet(std::move(ids));
      have_family = true;
      continue;
    }
    std::vector<int> ids;
    std::string tok;
    int bound = -1;
    bool after_colon = false;
    while (ss >> tok) {
      if (tok == ":") {
        after_colon = true;
        continue;
      }
      try {
        int v = std::stoi(tok);
        if (after_colon) bound = v;
        else ids.push_back(v);
      } catch (const std::exception&) {
        throw std::invalid_argument("procedure file line " + std::to_string(lineno) +
                                    ": cannot parse token '" + tok + "'");
      }
    }
    if (!after_colon || bound < 0) {
      throw std::invalid_argument("procedure file line " + std::to_string(lineno) +
                                  ": expected 'id... : bound'");
    }
    IndexSet S(std::move(ids));
    if (!S.subset_of(family)) {
      throw std::invalid_argument("procedure file line " + std::to_string(lineno) +
                                  ": set is not a subset of the family");
    }
    if (!table.emplace(S.ids(), bound).second) {
      throw std::invalid_argument("procedure file line " + std::to_string(lineno) +
                                  ": duplicate set");
    }
  }
  if (!have_family) {
    throw std::invalid_argument("procedure file: missing 'family' header: " + path);
  }
  return table_adapter(std::move(table), family);
}

}  // namespace tdg
