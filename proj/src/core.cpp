#include "tdg/core.hpp"

#include <algorithm>
#include <cmath>

namespace tdg {

IndexSet::IndexSet(std::vector<int> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  if (std::adjacent_find(ids_.begin(), ids_.end()) != ids_.end()) {
    throw std::invalid_argument("IndexSet: duplicate hypothesis id");
  }
  if (!ids_.empty() && ids_.front() < 1) {
    throw std::invalid_argument("IndexSet: hypothesis ids are 1-based");
  }
}

IndexSet IndexSet::range(int m) {
  if (m < 0) throw std::invalid_argument("IndexSet::range: m < 0");
  std::vector<int> ids(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) ids[static_cast<std::size_t>(i)] = i + 1;
  return IndexSet(std::move(ids));
}

IndexSet IndexSet::from_mask(std::uint64_t mask, const IndexSet& universe) {
  if (universe.size() > 64) {
    throw std::invalid_argument("IndexSet::from_mask: universe exceeds 64 ids");
  }
  std::vector<int> ids;
  for (int j = 0; j < universe.size(); ++j) {
    if (mask >> j & 1u) ids.push_back(universe.ids()[static_cast<std::size_t>(j)]);
  }
  return IndexSet(std::move(ids));
}

std::uint64_t IndexSet::mask_in(const IndexSet& universe) const {
  if (universe.size() > 64) {
    throw std::invalid_argument("IndexSet::mask_in: universe exceeds 64 ids");
  }
  std::uint64_t mask = 0;
  const auto& u = universe.ids();
  std::size_t j = 0;
  for (int id : ids_) {
    while (j < u.size() && u[j] < id) ++j;
    if (j == u.size() || u[j] != id) {
      throw std::domain_error("IndexSet::mask_in: not a subset of the universe");
    }
    mask |= std::uint64_t{1} << j;
  }
  return mask;
}

bool IndexSet::contains(int id) const {
  return std::binary_search(ids_.begin(), ids_.end(), id);
}

bool IndexSet::subset_of(const IndexSet& other) const {
  return std::includes(other.ids_.begin(), other.ids_.end(), ids_.begin(), ids_.end());
}

int intersection_size(const IndexSet& a, const IndexSet& b) {
  int n = 0;
  auto ia = a.begin(), ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) ++ia;
    else if (*ib < *ia) ++ib;
    else { ++n; ++ia; ++ib; }
  }
  return n;
}

IndexSet set_difference(const IndexSet& a, const IndexSet& b) {
  std::vector<int> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return IndexSet(std::move(out));
}

IndexSet set_union(const IndexSet& a, const IndexSet& b) {
  std::vector<int> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return IndexSet(std::move(out));
}

PValueVector::PValueVector(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("PValueVector: p-value outside [0,1]");
    }
  }
}

double PValueVector::at(int id) const {
  if (id < 1 || id > size()) {
    throw std::domain_error("PValueVector::at: id out of range");
  }
  return values_[static_cast<std::size_t>(id - 1)];
}

DiscoveryProcedure::DiscoveryProcedure(IndexSet family, BoundFn fn, ProcedureShape shape)
    : family_(std::move(family)), fn_(std::move(fn)), shape_(std::move(shape)) {
  if (!fn_) throw std::invalid_argument("DiscoveryProcedure: empty bound function");
}

int DiscoveryProcedure::bound(const IndexSet& S) const {
  if (!S.subset_of(family_)) {
    throw std::domain_error("DiscoveryProcedure::bound: S is not a subset of the family");
  }
  if (S.empty()) return 0;
  int v = fn_(S);
  return std::clamp(v, 0, S.size());
}

FdpBound tdg_to_fdp(const DiscoveryProcedure& d, const IndexSet& S) {
  int n = S.size();
  int v = d.bound(S);
  double q = static_cast<double>(n - v) / static_cast<double>(std::max(n, 1));
  return FdpBound{S, q};
}

int fdp_to_tdg(double q, const IndexSet& S) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::domain_error("fdp_to_tdg: q outside [0,1]");
  }
  double raw = (1.0 - q) * S.size();
  int v = static_cast<int>(std::ceil(raw - 1e-12));
  return std::clamp(v, 0, S.size());
}

}  // namespace tdg
