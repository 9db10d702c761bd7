#include <algorithm>
#include <numeric>

#include "lmbench/ngram_counts.hpp"

namespace lmbench::kn {

CountTable::CountTable(int order, std::size_t vocab_size, std::vector<OrderCounts> orders)
    : order_(order), vocab_size_(vocab_size), orders_(std::move(orders)) {
  if (order_ < 1) throw Error("n-gram order must be at least 1");
  if (orders_.size() != static_cast<std::size_t>(order_)) {
    throw Error("count table needs one entry per order");
  }
}

std::uint64_t CountTable::count(std::span<const WordId> gram) const {
  if (gram.empty() || gram.size() > orders_.size()) return 0;
  const auto& oc = orders_[gram.size() - 1];
  auto i = oc.grams.find(gram);
  return i ? oc.counts[*i] : 0;
}

std::uint64_t CountTable::continuation_count(std::span<const WordId> gram) const {
  if (gram.empty() || gram.size() >= orders_.size()) return 0;
  const auto& oc = orders_[gram.size() - 1];
  auto i = oc.grams.find(gram);
  return i ? oc.continuation[*i] : 0;
}

CountTable CountTable::truncated(int order) const {
  if (order < 1 || order > order_) throw Error("invalid truncation order");
  std::vector<OrderCounts> kept(orders_.begin(), orders_.begin() + order);
  return CountTable(order, vocab_size_, std::move(kept));
}

namespace {

void tally_counts_of_counts(OrderCounts& oc) {
  oc.counts_of_counts.fill(0);
  for (auto c : oc.effective) {
    if (c >= 1 && c <= 4) ++oc.counts_of_counts[c - 1];
  }
}

}  // namespace

CountTable count_ngrams(const Dataset& data, std::size_t vocab_size, int order) {
  if (order < 1) throw Error("n-gram order must be at least 1");
  const auto bos = static_cast<WordId>(vocab_size);
  const auto pad = static_cast<std::size_t>(order - 1);

  // Padded token stream plus the positions of every predicted token.
  std::vector<WordId> stream;
  std::vector<std::uint32_t> positions;
  stream.reserve(data.token_count + data.sentences.size() * pad);
  positions.reserve(data.token_count);
  for (const auto& sentence : data.sentences) {
    stream.insert(stream.end(), pad, bos);
    for (WordId w : sentence) {
      if (w >= vocab_size) {
        throw Error("word id " + std::to_string(w) + " out of range for vocabulary of size " +
                    std::to_string(vocab_size));
      }
      positions.push_back(static_cast<std::uint32_t>(stream.size()));
      stream.push_back(w);
    }
  }

  std::vector<OrderCounts> orders;
  orders.reserve(static_cast<std::size_t>(order));
  std::vector<std::uint32_t> idx = positions;
  for (int n = 1; n <= order; ++n) {
    const auto len = static_cast<std::size_t>(n);
    auto gram_at = [&](std::uint32_t p) {
      return std::span<const WordId>(stream.data() + p + 1 - len, len);
    };
    std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
      auto ga = gram_at(a);
      auto gb = gram_at(b);
      return std::lexicographical_compare(ga.begin(), ga.end(), gb.begin(), gb.end());
    });

    OrderCounts oc{GramList(len), {}, {}, {}, {}};
    for (std::size_t i = 0; i < idx.size();) {
      auto g = gram_at(idx[i]);
      std::size_t j = i + 1;
      while (j < idx.size() && std::ranges::equal(gram_at(idx[j]), g)) ++j;
      oc.grams.push_back(g);
      oc.counts.push_back(j - i);
      i = j;
    }
    orders.push_back(std::move(oc));
  }

  // Continuation counts: each distinct (n+1)-gram credits its n-length suffix.
  for (int n = 1; n < order; ++n) {
    auto& lower = orders[static_cast<std::size_t>(n - 1)];
    const auto& upper = orders[static_cast<std::size_t>(n)];
    lower.continuation.assign(lower.grams.size(), 0);
    for (std::size_t i = 0; i < upper.grams.size(); ++i) {
      auto suffix = upper.grams[i].subspan(1);
      auto j = lower.grams.find(suffix);
      if (!j) throw Error("internal: missing suffix while counting continuations");
      ++lower.continuation[*j];
    }
    lower.effective.resize(lower.grams.size());
    for (std::size_t i = 0; i < lower.grams.size(); ++i) {
      lower.effective[i] = lower.grams[i].front() == bos ? lower.counts[i] : lower.continuation[i];
    }
    tally_counts_of_counts(lower);
  }
  auto& top = orders.back();
  top.effective = top.counts;
  tally_counts_of_counts(top);

  return CountTable(order, vocab_size, std::move(orders));
}

Discount estimate_discount(const std::array<std::uint64_t, 4>& n) {
  Discount d;
  const double n1 = static_cast<double>(n[0]);
  const double n2 = static_cast<double>(n[1]);
  const double n3 = static_cast<double>(n[2]);
  const double n4 = static_cast<double>(n[3]);
  if (n[0] == 0) return d;

  const double y = n1 / (n1 + 2.0 * n2);
  auto settle = [](double value, double upper, double fallback) {
    value = std::clamp(value, 0.0, upper);
    return value > 0.0 ? value : fallback;
  };
  d.d1 = settle(1.0 - 2.0 * y * n2 / n1, 1.0, Discount::kDefault1);
  if (n[1] != 0) d.d2 = settle(2.0 - 3.0 * y * n3 / n2, 2.0, Discount::kDefault2);
  if (n[2] != 0) d.d3plus = settle(3.0 - 4.0 * y * n4 / n3, 3.0, Discount::kDefault3);
  return d;
}

std::vector<Discount> estimate_discounts(const CountTable& table) {
  std::vector<Discount> out;
  for (int n = 1; n <= table.order(); ++n) out.push_back(estimate_discount(table.at(n).counts_of_counts));
  return out;
}

}  // namespace lmbench::kn
