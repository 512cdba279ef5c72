#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tdg/closed_testing.hpp"
#include "tdg/core.hpp"
#include "tdg/local_tests.hpp"

namespace tdg {

/// Adapters lifting classical multiple-testing outputs into discovery
/// procedures. Each returns a procedure over family I that is nonzero only on
/// the sets the source method makes a statement about; interpolation extends
/// the statement to all subsets.

/// d(K) = |K| - k + 1 clamped at 0, zero elsewhere (k-FWER statement on K).
DiscoveryProcedure adapt_kfwer(const IndexSet& K, int k, const IndexSet& I);

/// d(K) = ceil((1 - gamma) |K|), zero elsewhere (FDX statement on K).
DiscoveryProcedure adapt_fdx(const IndexSet& K, double gamma, const IndexSet& I);

/// d(K_i) = |K_i| - k_i + 1 clamped at 0 for each listed pair, zero elsewhere.
DiscoveryProcedure adapt_jer(const std::vector<std::pair<IndexSet, int>>& sets,
                             const IndexSet& I);

/// d(K_i) = k_i with k_i in {0,1}, zero elsewhere.
DiscoveryProcedure adapt_intersection_fwer(
    const std::vector<std::pair<IndexSet, int>>& sets, const IndexSet& I);

/// d(I) = delta * k, zero elsewhere (partial conjunction statement on I).
DiscoveryProcedure adapt_partial_conjunction(int delta, int k, const IndexSet& I);

/// d(I) = ceil((1 - u) |I|), zero elsewhere (pi0 confidence statement on I).
DiscoveryProcedure adapt_pi0_interval(double u, const IndexSet& I);

/// The four-stage chain on a p-value vector, pointwise nondecreasing:
/// original <= coherent <= closed <= admissible.
DiscoveryProcedure kr_original_procedure(const PValueVector& p, double alpha);
DiscoveryProcedure kr_coherent_procedure(const PValueVector& p, double alpha);
DiscoveryProcedure kr_closed_procedure(const PValueVector& p, double alpha);
DiscoveryProcedure kr_admissible_procedure(const PValueVector& p, double alpha);

/// Interpolation: d_bar(S) = max over U of d(U) - |U\S| + d(S\U), iterated to
/// its fixed point so the result is coherent. Structure tags dispatch closed
/// forms (k-FWER-like single-set statements; the nested KR chain); procedures
/// without a tag take the exponential generic path, gated at |I| <= 20.
DiscoveryProcedure interpolate(const DiscoveryProcedure& d);

/// Coherence check: d(V) + d(W) <= d(V union W) <= d(V) + |W| for every
/// disjoint pair V, W. Oracle scale only (|I| <= 16).
bool is_coherent(const DiscoveryProcedure& d);

/// 1 iff builder(I).bound(S) >= builder(J).bound(S) for all S subseteq I
/// subseteq J. Oracle scale only (|J| <= 12).
bool check_monotone_stack(const std::function<DiscoveryProcedure(const IndexSet&)>& builder,
                          const IndexSet& J);

enum class Dominance { Equal, ADominates, BDominates, Incomparable };

/// Pointwise comparison of two procedures over the same family.
Dominance dominates(const DiscoveryProcedure& a, const DiscoveryProcedure& b);

/// phi_S = 1{builder(S).bound(S) > 0}, the local test a procedure stack
/// induces; feeding it back through closed testing recovers any coherent
/// monotone procedure.
int induce_local_test(const std::function<DiscoveryProcedure(const IndexSet&)>& builder,
                      const IndexSet& S);
LocalTestSuite induced_suite(std::function<DiscoveryProcedure(const IndexSet&)> builder,
                             std::string description = {});

/// Text serialization of extensional procedures: a `family` header line, then
/// one `id... : bound` record per nonzero entry; absent sets are zero.
void save_procedure(const DiscoveryProcedure& d, const std::string& path);
DiscoveryProcedure load_procedure(const std::string& path);

}  // namespace tdg
