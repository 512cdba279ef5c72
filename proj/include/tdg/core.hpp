#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <variant>
#include <vector>

namespace tdg {

/// File-level failures (open/read/write), kept distinct from validation
/// errors so callers can map them to different exit codes.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A finite set of hypothesis ids, stored as a strictly increasing sequence.
/// Ids are 1-based. Sets with at most 64 members of a common universe can be
/// round-tripped through position bitmasks, which the brute-force oracle uses
/// for O(1) subset tests.
class IndexSet {
 public:
  IndexSet() = default;
  explicit IndexSet(std::vector<int> ids);

  /// {1, 2, ..., m}
  static IndexSet range(int m);
  /// Build from a position mask relative to `universe` (bit j = j-th member).
  static IndexSet from_mask(std::uint64_t mask, const IndexSet& universe);
  /// Position mask of this set within `universe`. Throws if not a subset.
  std::uint64_t mask_in(const IndexSet& universe) const;

  int size() const { return static_cast<int>(ids_.size()); }
  bool empty() const { return ids_.empty(); }
  bool contains(int id) const;
  bool subset_of(const IndexSet& other) const;
  const std::vector<int>& ids() const { return ids_; }

  bool operator==(const IndexSet&) const = default;

  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }

 private:
  std::vector<int> ids_;
};

int intersection_size(const IndexSet& a, const IndexSet& b);
IndexSet set_difference(const IndexSet& a, const IndexSet& b);
IndexSet set_union(const IndexSet& a, const IndexSet& b);

/// Observed p-values p_1..p_m, indexed by hypothesis id.
class PValueVector {
 public:
  PValueVector() = default;
  explicit PValueVector(std::vector<double> values);

  int size() const { return static_cast<int>(values_.size()); }
  /// 1-based access by hypothesis id.
  double at(int id) const;
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_;
};

/// Structure tags carried by procedures whose interpolation has a closed
/// form, so interpolate() can avoid the exponential generic path.
struct KFwerShape {
  IndexSet reported;
  int k = 1;
};
struct KrShape {
  std::shared_ptr<const PValueVector> p;
  double alpha = 0.05;
  double c = 0.0;
};
using ProcedureShape = std::variant<std::monostate, KFwerShape, KrShape>;

/// A queryable map S -> d(S): a simultaneous lower confidence bound on the
/// number of true discoveries in each subset of the family. Values are
/// integers in [0, |S|] with d(empty) = 0, enforced at query time.
class DiscoveryProcedure {
 public:
  using BoundFn = std::function<int(const IndexSet&)>;

  DiscoveryProcedure(IndexSet family, BoundFn fn, ProcedureShape shape = {});

  int bound(const IndexSet& S) const;
  const IndexSet& family() const { return family_; }
  const ProcedureShape& shape() const { return shape_; }

 private:
  IndexSet family_;
  BoundFn fn_;
  ProcedureShape shape_;
};

/// An upper confidence bound on the false discovery proportion of a set.
struct FdpBound {
  IndexSet set;
  double q = 0.0;
};

/// q(S) = (|S| - d(S)) / max(|S|, 1)
FdpBound tdg_to_fdp(const DiscoveryProcedure& d, const IndexSet& S);

/// d(S) = ceil((1 - q) |S|), clamped to [0, |S|]
int fdp_to_tdg(double q, const IndexSet& S);

}  // namespace tdg
