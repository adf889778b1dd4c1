#pragma once

#include <cstdint>
#include <vector>

#include "tensorsat/ids.hpp"

namespace tensorsat {

// Union-find over class ids. The smaller id always becomes the root, which
// keeps canonical ids deterministic. `find` is const (no compression) so that
// concurrent readers are safe; `compress` flattens all paths in one pass.
class UnionFind {
 public:
  ClassId make_set() {
    ClassId id{static_cast<std::uint32_t>(parent_.size())};
    parent_.push_back(id.value);
    return id;
  }

  ClassId find(ClassId id) const {
    std::uint32_t cur = id.value;
    while (parent_[cur] != cur) cur = parent_[cur];
    return ClassId{cur};
  }

  /// Returns the surviving root, or the common root if already joined.
  ClassId unite(ClassId a, ClassId b) {
    ClassId ra = find(a);
    ClassId rb = find(b);
    if (ra == rb) return ra;
    if (rb < ra) std::swap(ra, rb);
    parent_[rb.value] = ra.value;
    return ra;
  }

  void compress() {
    for (std::uint32_t i = 0; i < parent_.size(); ++i) parent_[i] = find(ClassId{i}).value;
  }

  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<std::uint32_t> parent_;
};

}  // namespace tensorsat
