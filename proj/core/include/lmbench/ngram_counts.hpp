#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lmbench/corpus.hpp"
#include "lmbench/gram_list.hpp"

namespace lmbench::kn {

inline constexpr int kDefaultOrder = 5;

struct OrderCounts {
  GramList grams;
  std::vector<std::uint64_t> counts;        // raw occurrence counts
  std::vector<std::uint64_t> continuation;  // distinct left extensions; empty at the top order
  std::vector<std::uint64_t> effective;     // counts the estimator discounts
  std::array<std::uint64_t, 4> counts_of_counts{};  // n1..n4 over `effective`
};

/// N-gram statistics for orders 1..order.
///
/// Every sentence is preceded by order-1 begin-of-sentence symbols whose id is
/// `bos()` (one past the vocabulary). They appear only as context. Effective
/// counts are raw counts at the top order and for grams starting with the
/// begin-of-sentence symbol, continuation counts otherwise.
class CountTable {
 public:
  CountTable(int order, std::size_t vocab_size, std::vector<OrderCounts> orders);

  int order() const noexcept { return order_; }
  std::size_t vocab_size() const noexcept { return vocab_size_; }
  WordId bos() const noexcept { return static_cast<WordId>(vocab_size_); }

  const OrderCounts& at(int n) const { return orders_.at(static_cast<std::size_t>(n - 1)); }

  std::uint64_t count(std::span<const WordId> gram) const;
  std::uint64_t continuation_count(std::span<const WordId> gram) const;

  /// Keeps orders 1..order with their effective counts unchanged.
  CountTable truncated(int order) const;

 private:
  int order_;
  std::size_t vocab_size_;
  std::vector<OrderCounts> orders_;
};

CountTable count_ngrams(const Dataset& data, std::size_t vocab_size, int order);

/// Absolute discounts for counts 1, 2 and 3+ at one order.
struct Discount {
  static constexpr double kDefault1 = 0.75;
  static constexpr double kDefault2 = 1.5;
  static constexpr double kDefault3 = 2.25;

  double d1 = kDefault1;
  double d2 = kDefault2;
  double d3plus = kDefault3;

  double operator()(std::uint64_t count) const noexcept {
    if (count == 0) return 0.0;
    if (count == 1) return d1;
    if (count == 2) return d2;
    return d3plus;
  }
};

/// Closed-form modified Kneser-Ney discounts from counts-of-counts n1..n4.
/// A discount whose formula divides by a zero count, or that clamps to zero,
/// takes its default; n1 = 0 yields all defaults.
Discount estimate_discount(const std::array<std::uint64_t, 4>& n);

std::vector<Discount> estimate_discounts(const CountTable& table);

}  // namespace lmbench::kn
