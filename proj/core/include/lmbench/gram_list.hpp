#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "lmbench/common.hpp"

namespace lmbench::kn {

// Fixed-length n-grams stored back to back. Lookups assume the list is in
// lexicographic order with no duplicates.
class GramList {
 public:
  explicit GramList(std::size_t n = 1) : n_(n) {}

  std::size_t n() const noexcept { return n_; }
  std::size_t size() const noexcept { return ids_.size() / n_; }
  bool empty() const noexcept { return ids_.empty(); }

  std::span<const WordId> operator[](std::size_t i) const {
    return {ids_.data() + i * n_, n_};
  }

  void push_back(std::span<const WordId> gram) {
    ids_.insert(ids_.end(), gram.begin(), gram.end());
  }
  void reserve(std::size_t grams) { ids_.reserve(grams * n_); }

  std::optional<std::size_t> find(std::span<const WordId> gram) const {
    if (gram.size() != n_) return std::nullopt;
    auto [lo, hi] = prefix_range(gram);
    if (lo == hi) return std::nullopt;
    return lo;
  }

  // Half-open index range of grams whose leading ids equal `prefix`.
  std::pair<std::size_t, std::size_t> prefix_range(std::span<const WordId> prefix) const {
    const std::size_t k = std::min(prefix.size(), n_);
    std::size_t lo = 0;
    std::size_t hi = size();
    // lower bound
    while (lo < hi) {
      std::size_t mid = lo + (hi - lo) / 2;
      if (compare_prefix(mid, prefix, k) < 0) lo = mid + 1; else hi = mid;
    }
    std::size_t first = lo;
    hi = size();
    // upper bound
    while (lo < hi) {
      std::size_t mid = lo + (hi - lo) / 2;
      if (compare_prefix(mid, prefix, k) <= 0) lo = mid + 1; else hi = mid;
    }
    return {first, lo};
  }

  const std::vector<WordId>& ids() const noexcept { return ids_; }

 private:
  int compare_prefix(std::size_t i, std::span<const WordId> prefix, std::size_t k) const {
    const WordId* g = ids_.data() + i * n_;
    for (std::size_t j = 0; j < k; ++j) {
      if (g[j] != prefix[j]) return g[j] < prefix[j] ? -1 : 1;
    }
    return 0;
  }

  std::size_t n_;
  std::vector<WordId> ids_;
};

}  // namespace lmbench::kn
