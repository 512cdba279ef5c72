#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "tdg/procedures.hpp"
#include "tdg/rng.hpp"

using namespace tdg;

namespace {

PValueVector random_p(CounterRng& rng, int m) {
  std::vector<double> v(static_cast<std::size_t>(m));
  for (auto& x : v) {
    x = rng.next_uniform() < 0.4 ? normal_cdf(rng.next_normal() - 2.5)
                                 : rng.next_uniform();
  }
  return PValueVector(std::move(v));
}

DiscoveryProcedure strip_shape(const DiscoveryProcedure& d) {
  return DiscoveryProcedure(d.family(),
                            [d](const IndexSet& S) { return d.bound(S); });
}

}  // namespace

TEST_CASE("k-FWER adapter") {
  IndexSet I = IndexSet::range(4);
  auto d = adapt_kfwer(IndexSet({1, 3}), 1, I);
  CHECK(d.bound(IndexSet({1, 3})) == 2);
  CHECK(d.bound(IndexSet({1})) == 0);
  CHECK(d.bound(IndexSet({1, 2, 3})) == 0);
  CHECK(adapt_kfwer(IndexSet({1, 3}), 3, I).bound(IndexSet({1, 3})) == 0);
  CHECK(adapt_kfwer(IndexSet{}, 1, I).bound(IndexSet({2})) == 0);
  CHECK_THROWS_AS(adapt_kfwer(IndexSet({1}), 0, I), std::domain_error);
  CHECK_THROWS_AS(adapt_kfwer(IndexSet({5}), 1, I), std::domain_error);
}

TEST_CASE("FDX adapter") {
  IndexSet I = IndexSet::range(10);
  IndexSet K = IndexSet::range(10);
  CHECK(adapt_fdx(K, 0.1, I).bound(K) == 9);
  CHECK(adapt_fdx(K, 1.0, I).bound(K) == 0);
  CHECK(adapt_fdx(K, 0.0, I).bound(K) == 10);
  CHECK(adapt_fdx(K, 0.1, I).bound(IndexSet({1, 2})) == 0);
  CHECK_THROWS_AS(adapt_fdx(K, 1.1, I), std::domain_error);
}

TEST_CASE("JER and intersection-FWER adapters") {
  IndexSet I = IndexSet::range(5);
  auto d = adapt_jer({{IndexSet({1, 2}), 1}, {IndexSet({1, 2, 3, 4}), 2}}, I);
  CHECK(d.bound(IndexSet({1, 2})) == 2);
  CHECK(d.bound(IndexSet({1, 2, 3, 4})) == 3);
  CHECK(d.bound(IndexSet({1, 2, 3})) == 0);
  CHECK(adapt_jer({}, I).bound(IndexSet({1})) == 0);
  CHECK_THROWS_AS(adapt_jer({{IndexSet({1}), 1}, {IndexSet({1}), 2}}, I),
                  std::invalid_argument);
  CHECK_THROWS_AS(adapt_jer({{IndexSet({1}), 0}}, I), std::invalid_argument);

  auto f = adapt_intersection_fwer({{IndexSet({1, 2}), 1}, {IndexSet({3}), 0}}, I);
  CHECK(f.bound(IndexSet({1, 2})) == 1);
  CHECK(f.bound(IndexSet({3})) == 0);
  CHECK_THROWS_AS(adapt_intersection_fwer({{IndexSet({1, 2}), 2}}, I),
                  std::invalid_argument);
}

TEST_CASE("partial conjunction and pi0 adapters") {
  IndexSet I = IndexSet::range(6);
  CHECK(adapt_partial_conjunction(1, 4, I).bound(I) == 4);
  CHECK(adapt_partial_conjunction(0, 4, I).bound(I) == 0);
  CHECK(adapt_partial_conjunction(1, 0, I).bound(I) == 0);
  CHECK(adapt_partial_conjunction(1, 4, I).bound(IndexSet({1, 2, 3, 4})) == 0);
  CHECK_THROWS_AS(adapt_partial_conjunction(2, 1, I), std::domain_error);

  CHECK(adapt_pi0_interval(0.5, I).bound(I) == 3);
  CHECK(adapt_pi0_interval(1.0, I).bound(I) == 0);
  CHECK(adapt_pi0_interval(0.0, I).bound(I) == 6);
  CHECK_THROWS_AS(adapt_pi0_interval(-0.1, I), std::domain_error);
}

TEST_CASE("interpolation closed form for k-FWER statements") {
  IndexSet I = IndexSet::range(5);
  IndexSet K({1, 3, 5});
  auto d = adapt_kfwer(K, 2, I);
  auto di = interpolate(d);
  for (std::uint64_t mask = 0; mask < 32; ++mask) {
    IndexSet S = IndexSet::from_mask(mask, I);
    CHECK(di.bound(S) == std::max(0, intersection_size(S, K) - 1));
  }
  // the closed form agrees with the generic exponential path
  auto gi = interpolate(strip_shape(d));
  CHECK(dominates(di, gi) == Dominance::Equal);
}

TEST_CASE("interpolation single-maximizer example") {
  IndexSet I = IndexSet::range(3);
  DiscoveryProcedure d(I, [I](const IndexSet& S) { return S == I ? 2 : 0; });
  auto di = interpolate(d);
  CHECK(di.bound(IndexSet({1, 2})) == 1);  // 2 - 1 + 0
  CHECK(di.bound(I) == 2);
  CHECK(di.bound(IndexSet({1})) == 0);
}

TEST_CASE("interpolation iterates to its fixed point") {
  // A single round of the interpolation formula is not enough here: the
  // second round lifts {1,2,4,5} from 1 to 2 via the improved {2,4}.
  IndexSet I = IndexSet::range(5);
  DiscoveryProcedure d(I, [](const IndexSet& S) {
    if (S == IndexSet({1, 3})) return 2;
    if (S == IndexSet({2, 4})) return 1;
    return 0;
  });
  auto di = interpolate(d);
  CHECK(di.bound(IndexSet({2, 4, 5})) == 1);     // first round, via U = {1,3}
  CHECK(di.bound(IndexSet({1, 2, 4, 5})) == 2);  // second round, via U = {1,3}
                                                 // against the improved {2,4,5}
  CHECK(is_coherent(di));
  CHECK(dominates(interpolate(di), di) == Dominance::Equal);
}

TEST_CASE("KR closed-form interpolation example") {
  std::vector<double> v(10, 0.5);
  for (int i = 0; i < 5; ++i) v[static_cast<std::size_t>(i)] = 1e-4;
  PValueVector p(std::move(v));
  auto orig = kr_original_procedure(p, 0.05);
  auto coh = interpolate(orig);
  IndexSet S({1, 2, 3, 4, 5});
  CHECK(coh.bound(S) == 3);  // ceil(5 - 2.1626 * (1 + 10e-4)) at k=5
  CHECK(kr_coherent_procedure(p, 0.05).bound(S) == 3);
}

TEST_CASE("KR closed form equals generic interpolation at oracle scale") {
  CounterRng rng(7, 0);
  for (int trial = 0; trial < 10; ++trial) {
    int m = 1 + static_cast<int>(rng.next_u64() % 7);
    PValueVector p = random_p(rng, m);
    auto orig = kr_original_procedure(p, 0.05);
    auto closed_form = interpolate(orig);
    auto generic = interpolate(strip_shape(orig));
    REQUIRE(dominates(closed_form, generic) == Dominance::Equal);
  }
}

TEST_CASE("four-stage chain is pointwise nondecreasing") {
  CounterRng rng(13, 0);
  for (int trial = 0; trial < 10; ++trial) {
    int m = 1 + static_cast<int>(rng.next_u64() % 8);
    PValueVector p = random_p(rng, m);
    IndexSet I = IndexSet::range(m);
    auto orig = kr_original_procedure(p, 0.05);
    auto coh = kr_coherent_procedure(p, 0.05);
    auto clo = kr_closed_procedure(p, 0.05);
    auto adm = kr_admissible_procedure(p, 0.05);
    const std::uint64_t full = std::uint64_t{1} << m;
    for (std::uint64_t mask = 0; mask < full; ++mask) {
      IndexSet S = IndexSet::from_mask(mask, I);
      int a = orig.bound(S), b = coh.bound(S), c = clo.bound(S), d = adm.bound(S);
      REQUIRE(a <= b);
      REQUIRE(b <= c);
      REQUIRE(c <= d);
    }
  }
}

TEST_CASE("is_coherent detects violations of the double inequality") {
  IndexSet I = IndexSet::range(2);
  DiscoveryProcedure bad(I, [](const IndexSet& S) {
    return S == IndexSet({1}) ? 1 : 0;  // d({1,2}) = 0 breaks the left inequality
  });
  CHECK(!is_coherent(bad));
  DiscoveryProcedure zero(I, [](const IndexSet&) { return 0; });
  CHECK(is_coherent(zero));
  CHECK(is_coherent(interpolate(bad)));
}

TEST_CASE("dominates") {
  IndexSet I = IndexSet::range(3);
  DiscoveryProcedure zero(I, [](const IndexSet&) { return 0; });
  DiscoveryProcedure count(I, [](const IndexSet& S) { return S.size(); });
  DiscoveryProcedure first(I, [](const IndexSet& S) { return S.contains(1) ? 1 : 0; });
  DiscoveryProcedure last(I, [](const IndexSet& S) { return S.contains(3) ? 1 : 0; });
  CHECK(dominates(count, zero) == Dominance::ADominates);
  CHECK(dominates(zero, count) == Dominance::BDominates);
  CHECK(dominates(count, count) == Dominance::Equal);
  CHECK(dominates(first, last) == Dominance::Incomparable);
  DiscoveryProcedure other(IndexSet::range(4), [](const IndexSet&) { return 0; });
  CHECK_THROWS_AS(dominates(zero, other), std::invalid_argument);
}

TEST_CASE("monotone stack holds for closed testing, fails for upscaled alpha") {
  CounterRng rng(29, 0);
  PValueVector p = random_p(rng, 6);
  IndexSet J = IndexSet::range(6);

  auto closed_builder = [&p](const IndexSet& I) {
    std::vector<double> sub;
    for (int id : I) sub.push_back(p.at(id));
    std::sort(sub.begin(), sub.end());
    auto state = std::make_shared<ShortcutState>(
        shortcut_state_from_sorted(CriticalValueFamily::simes(0.05), std::move(sub)));
    auto pv = std::make_shared<PValueVector>(p);
    return DiscoveryProcedure(I, [state, pv](const IndexSet& S) {
      return shortcut_d(*state, *pv, S);
    });
  };
  CHECK(check_monotone_stack(closed_builder, J));

  // raising alpha with the family size breaks monotonicity
  PValueVector q({0.04, 0.5, 0.5});
  auto upscaled = [&q](const IndexSet& I) {
    double alpha = 0.01 + 0.02 * I.size();
    return DiscoveryProcedure(I, [&q, alpha, I](const IndexSet& S) {
      int hits = 0;
      for (int id : S) {
        if (q.at(id) <= alpha) ++hits;
      }
      return hits;
    });
  };
  CHECK(!check_monotone_stack(upscaled, IndexSet::range(3)));
  CHECK_THROWS_AS(check_monotone_stack(closed_builder, IndexSet::range(13)),
                  std::invalid_argument);
}

TEST_CASE("induced local tests") {
  CounterRng rng(37, 0);
  // Bonferroni rejection-count builder induces the Bonferroni local test
  for (int trial = 0; trial < 10; ++trial) {
    int m = 1 + static_cast<int>(rng.next_u64() % 6);
    PValueVector p = random_p(rng, m);
    auto builder = [&p](const IndexSet& I) {
      return DiscoveryProcedure(I, [&p, I](const IndexSet& S) {
        int hits = 0;
        for (int id : S) {
          if (p.at(id) <= 0.05 / I.size()) ++hits;
        }
        return hits;
      });
    };
    IndexSet I = IndexSet::range(m);
    const std::uint64_t full = std::uint64_t{1} << m;
    for (std::uint64_t mask = 0; mask < full; ++mask) {
      IndexSet S = IndexSet::from_mask(mask, I);
      int expect = 0;
      for (int id : S) {
        if (p.at(id) <= 0.05 / S.size()) expect = 1;
      }
      REQUIRE(induce_local_test(builder, S) == expect);
    }
  }
  auto zero_builder = [](const IndexSet& I) {
    return DiscoveryProcedure(I, [](const IndexSet&) { return 0; });
  };
  CHECK(induce_local_test(zero_builder, IndexSet({1, 2})) == 0);
  CHECK(induced_suite(zero_builder).test(IndexSet({1})) == 0);
}

TEST_CASE("serialization round trip") {
  IndexSet I = IndexSet::range(4);
  auto d = interpolate(adapt_kfwer(IndexSet({1, 3, 4}), 2, I));
  std::string path = "tdg_test_proc.txt";
  save_procedure(d, path);
  auto loaded = load_procedure(path);
  CHECK(loaded.family() == I);
  CHECK(dominates(loaded, d) == Dominance::Equal);
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_procedure("does-not-exist.txt"), IoError);
}

TEST_CASE("serialization rejects malformed files") {
  std::string path = "tdg_test_bad_proc.txt";
  auto write = [&](const char* body) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs(body, f);
    std::fclose(f);
  };
  write("1 2 : 1\n");
  CHECK_THROWS_AS(load_procedure(path), std::invalid_argument);  // missing header
  write("family 1 2 3\n1 2 1\n");
  CHECK_THROWS_AS(load_procedure(path), std::invalid_argument);  // missing colon
  write("family 1 2 3\n1 4 : 1\n");
  CHECK_THROWS_AS(load_procedure(path), std::invalid_argument);  // not a subset
  write("family 1 2 3\n1 : 1\n1 : 2\n");
  CHECK_THROWS_AS(load_procedure(path), std::invalid_argument);  // duplicate set
  std::remove(path.c_str());
}
