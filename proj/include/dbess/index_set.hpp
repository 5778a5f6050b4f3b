#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "dbess/errors.hpp"

namespace dbess {

/// Strictly increasing set of nonnegative indices. The upper bound p is not
/// stored; operations that need it take it explicitly and range-check.
class IndexSet {
 public:
  IndexSet() = default;

  explicit IndexSet(std::vector<int> indices) : idx_(std::move(indices)) {
    for (std::size_t i = 0; i < idx_.size(); ++i) {
      if (idx_[i] < 0) throw IndexOutOfRange("IndexSet: negative index");
      if (i > 0 && idx_[i] <= idx_[i - 1])
        throw IndexOutOfRange("IndexSet: indices must be strictly increasing");
    }
  }

  static IndexSet from_unsorted(std::vector<int> indices) {
    std::sort(indices.begin(), indices.end());
    return IndexSet(std::move(indices));
  }

  int size() const { return static_cast<int>(idx_.size()); }
  bool empty() const { return idx_.empty(); }
  bool contains(int j) const { return std::binary_search(idx_.begin(), idx_.end(), j); }
  const std::vector<int>& indices() const { return idx_; }
  int operator[](int i) const { return idx_[static_cast<std::size_t>(i)]; }

  auto begin() const { return idx_.begin(); }
  auto end() const { return idx_.end(); }

  /// Complement within {0, ..., p-1}.
  IndexSet complement(int p) const {
    if (!idx_.empty() && idx_.back() >= p)
      throw IndexOutOfRange("IndexSet::complement: index exceeds dimension");
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(p) - idx_.size());
    std::size_t k = 0;
    for (int j = 0; j < p; ++j) {
      if (k < idx_.size() && idx_[k] == j) {
        ++k;
      } else {
        out.push_back(j);
      }
    }
    return IndexSet(std::move(out));
  }

  friend bool operator==(const IndexSet& a, const IndexSet& b) { return a.idx_ == b.idx_; }
  friend bool operator!=(const IndexSet& a, const IndexSet& b) { return a.idx_ != b.idx_; }

 private:
  std::vector<int> idx_;
};

/// a \ b, both strictly increasing.
inline IndexSet set_difference(const IndexSet& a, const IndexSet& b) {
  std::vector<int> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return IndexSet(std::move(out));
}

/// a ∪ b, both strictly increasing.
inline IndexSet set_union(const IndexSet& a, const IndexSet& b) {
  std::vector<int> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return IndexSet(std::move(out));
}

/// |a ∩ b|.
inline int intersection_size(const IndexSet& a, const IndexSet& b) {
  int count = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

}  // namespace dbess
