#include "lmbench/kn_model.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace lmbench::kn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxOrder = 16;

void sort_table(OrderTable& t, int n) {
  const std::size_t size = t.grams.size();
  if (t.log_prob.size() != size || t.log_backoff.size() != size) {
    throw Error("order " + std::to_string(n) + " table has inconsistent column sizes");
  }
  std::vector<std::size_t> perm(size);
  std::iota(perm.begin(), perm.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    auto ga = t.grams[a];
    auto gb = t.grams[b];
    return std::lexicographical_compare(ga.begin(), ga.end(), gb.begin(), gb.end());
  };
  if (std::is_sorted(perm.begin(), perm.end(), less)) return;
  std::stable_sort(perm.begin(), perm.end(), less);
  OrderTable sorted{GramList(t.grams.n()), {}, {}};
  sorted.grams.reserve(size);
  sorted.log_prob.reserve(size);
  sorted.log_backoff.reserve(size);
  for (auto i : perm) {
    sorted.grams.push_back(t.grams[i]);
    sorted.log_prob.push_back(t.log_prob[i]);
    sorted.log_backoff.push_back(t.log_backoff[i]);
  }
  t = std::move(sorted);
}

// Standard back-off recursion over stored orders; `context` already truncated.
double backoff_log_prob(std::span<const OrderTable> tables, std::span<const WordId> context,
                        WordId word) {
  std::array<WordId, kMaxOrder> buf{};
  double acc = 0.0;
  for (std::size_t len = context.size(); len > 0; --len) {
    auto h = context.last(len);
    std::copy(h.begin(), h.end(), buf.begin());
    buf[len] = word;
    const auto& upper = tables[len];
    if (auto i = upper.grams.find(std::span<const WordId>(buf.data(), len + 1))) {
      return acc + upper.log_prob[*i];
    }
    const auto& ctx_table = tables[len - 1];
    if (auto c = ctx_table.grams.find(h)) acc += ctx_table.log_backoff[*c];
  }
  return acc + tables[0].log_prob[word];
}

}  // namespace

NGramModel::NGramModel(Vocabulary vocab, std::vector<OrderTable> tables)
    : vocab_(std::move(vocab)), tables_(std::move(tables)) {
  if (tables_.empty()) throw Error("n-gram model needs at least one order");
  if (tables_.size() > kMaxOrder) throw Error("n-gram order exceeds " + std::to_string(kMaxOrder));
  const WordId bos = bos_id();

  for (std::size_t k = 0; k < tables_.size(); ++k) {
    auto& t = tables_[k];
    const int n = static_cast<int>(k + 1);
    if (t.grams.n() != k + 1) throw Error("order " + std::to_string(n) + " table has wrong gram length");
    for (WordId id : t.grams.ids()) {
      if (id > bos) throw Error("order " + std::to_string(n) + " table holds out-of-range word id");
    }
    sort_table(t, n);
    for (std::size_t i = 0; i < t.grams.size(); ++i) {
      if (i > 0 && std::ranges::equal(t.grams[i], t.grams[i - 1])) {
        throw Error("duplicate " + std::to_string(n) + "-gram");
      }
      if (t.grams[i].back() == bos) t.log_prob[i] = kNegInf;
    }
  }

  auto& uni = tables_[0];
  if (uni.grams.size() == vocab_.size()) {
    // Supply the begin-of-sentence unigram when the source omitted it.
    const WordId b = bos;
    uni.grams.push_back(std::span<const WordId>(&b, 1));
    uni.log_prob.push_back(kNegInf);
    uni.log_backoff.push_back(0.0);
  }
  if (uni.grams.size() != vocab_.size() + 1) {
    throw Error("unigram table must cover every vocabulary word");
  }
  for (std::size_t i = 0; i < uni.grams.size(); ++i) {
    if (uni.grams[i][0] != i) throw Error("unigram table must cover every vocabulary word");
  }

  for (std::size_t k = 1; k < tables_.size(); ++k) {
    const auto& t = tables_[k];
    for (std::size_t i = 0; i < t.grams.size(); ++i) {
      if (!tables_[k - 1].grams.find(t.grams[i].first(k))) {
        throw Error(std::to_string(k + 1) + "-gram has no stored prefix context");
      }
    }
  }
}

void NGramModel::check_context(std::span<const WordId> context) const {
  for (WordId id : context) {
    if (id > bos_id()) throw Error("context word id " + std::to_string(id) + " out of range");
  }
}

double NGramModel::log_prob(std::span<const WordId> context, WordId word) const {
  if (word >= vocab_size()) throw Error("word id " + std::to_string(word) + " out of range");
  check_context(context);
  const auto max_ctx = tables_.size() - 1;
  if (context.size() > max_ctx) context = context.last(max_ctx);
  return backoff_log_prob(tables_, context, word);
}

double NGramModel::prob(std::span<const WordId> context, WordId word) const {
  return std::exp(log_prob(context, word));
}

void NGramModel::next_word_distribution(std::span<const WordId> context,
                                        std::span<double> out) const {
  const std::size_t v = vocab_size();
  if (out.size() != v) throw ShapeError("distribution buffer must have vocabulary size");
  check_context(context);
  const auto max_ctx = tables_.size() - 1;
  if (context.size() > max_ctx) context = context.last(max_ctx);

  // Highest order first; lower orders fill only words not yet assigned.
  std::vector<char> done(v, 0);
  double acc = 0.0;
  for (std::size_t len = context.size(); len > 0; --len) {
    auto h = context.last(len);
    const auto& upper = tables_[len];
    auto [lo, hi] = upper.grams.prefix_range(h);
    for (std::size_t i = lo; i < hi; ++i) {
      WordId w = upper.grams[i][len];
      if (w < v && !done[w]) {
        out[w] = std::exp(acc + upper.log_prob[i]);
        done[w] = 1;
      }
    }
    const auto& ctx_table = tables_[len - 1];
    if (auto c = ctx_table.grams.find(h)) acc += ctx_table.log_backoff[*c];
  }
  const auto& uni = tables_[0].log_prob;
  for (std::size_t w = 0; w < v; ++w) {
    if (!done[w]) out[w] = std::exp(acc + uni[w]);
  }
}

NGramModel estimate_kn(const CountTable& counts, std::span<const Discount> discounts,
                       const Vocabulary& vocab) {
  const int order = counts.order();
  if (discounts.size() != static_cast<std::size_t>(order)) {
    throw Error("estimate_kn needs one discount triple per order");
  }
  if (counts.vocab_size() != vocab.size()) throw Error("count table and vocabulary disagree on size");
  const std::size_t v = vocab.size();
  const auto bos = static_cast<WordId>(v);

  std::vector<OrderTable> tables;
  tables.reserve(static_cast<std::size_t>(order));

  // Unigrams, interpolated with the uniform distribution.
  {
    OrderTable t{GramList(1), std::vector<double>(v + 1, kNegInf), std::vector<double>(v + 1, 0.0)};
    t.grams.reserve(v + 1);
    for (WordId w = 0; w <= bos; ++w) t.grams.push_back(std::span<const WordId>(&w, 1));

    const auto& oc = counts.at(1);
    std::vector<std::uint64_t> eff(v, 0);
    for (std::size_t i = 0; i < oc.grams.size(); ++i) eff[oc.grams[i][0]] = oc.effective[i];

    const Discount& d = discounts[0];
    double total = 0.0;
    std::array<double, 3> classes{};
    for (auto c : eff) {
      total += static_cast<double>(c);
      if (c > 0) ++classes[std::min<std::uint64_t>(c, 3) - 1];
    }
    if (total <= 0.0) throw Error("cannot estimate a model from an empty dataset");
    const double gamma = (d.d1 * classes[0] + d.d2 * classes[1] + d.d3plus * classes[2]) / total;
    for (std::size_t w = 0; w < v; ++w) {
      const double c = static_cast<double>(eff[w]);
      const double p = (c - d(eff[w])) / total + gamma / static_cast<double>(v);
      t.log_prob[w] = std::log(p);
    }
    tables.push_back(std::move(t));
  }

  for (int n = 2; n <= order; ++n) {
    const auto len = static_cast<std::size_t>(n);
    const auto& oc = counts.at(n);
    const Discount& d = discounts[len - 1];

    OrderTable t{oc.grams, {}, {}};
    if (n < order) {
      std::vector<WordId> all_bos(len, bos);
      t.grams.push_back(all_bos);
    }
    t.log_prob.assign(t.grams.size(), kNegInf);
    t.log_backoff.assign(t.grams.size(), 0.0);

    auto& lower = tables.back();
    for (std::size_t i = 0; i < oc.grams.size();) {
      auto context = oc.grams[i].first(len - 1);
      std::size_t j = i;
      double total = 0.0;
      std::array<double, 3> classes{};
      for (; j < oc.grams.size() && std::ranges::equal(oc.grams[j].first(len - 1), context); ++j) {
        total += static_cast<double>(oc.effective[j]);
        ++classes[std::min<std::uint64_t>(oc.effective[j], 3) - 1];
      }
      const double gamma = (d.d1 * classes[0] + d.d2 * classes[1] + d.d3plus * classes[2]) / total;
      for (std::size_t k = i; k < j; ++k) {
        auto li = lower.grams.find(oc.grams[k].subspan(1));
        if (!li) throw Error("internal: lower-order gram missing during estimation");
        const double c = static_cast<double>(oc.effective[k]);
        const double p = (c - d(oc.effective[k])) / total + gamma * std::exp(lower.log_prob[*li]);
        t.log_prob[k] = std::log(p);
      }
      auto ci = lower.grams.find(context);
      if (!ci) throw Error("internal: context missing during estimation");
      lower.log_backoff[*ci] = std::log(gamma);
      i = j;
    }
    tables.push_back(std::move(t));
  }

  return NGramModel(vocab, std::move(tables));
}

NGramModel train_kn(const Dataset& data, const Vocabulary& vocab, int order) {
  if (data.empty()) throw Error("cannot train on an empty dataset");
  auto counts = count_ngrams(data, vocab.size(), order);
  auto discounts = estimate_discounts(counts);
  return estimate_kn(counts, discounts, vocab);
}

NGramModel truncate_order(const NGramModel& model, int order) {
  if (order < 1 || order > model.order()) throw Error("invalid truncation order");
  std::vector<OrderTable> tables;
  for (int n = 1; n <= order; ++n) tables.push_back(model.table(n));

  for (std::size_t k = 0; k < tables.size(); ++k) {
    auto& t = tables[k];
    for (std::size_t i = 0; i < t.grams.size(); ++i) {
      t.log_backoff[i] = 0.0;
      if (k + 1 == tables.size()) continue;
      const auto& upper = tables[k + 1];
      auto h = t.grams[i];
      auto [lo, hi] = upper.grams.prefix_range(h);
      if (lo == hi) continue;
      double seen = 0.0;
      double seen_lower = 0.0;
      for (std::size_t s = lo; s < hi; ++s) {
        WordId w = upper.grams[s][k + 1];
        seen += std::exp(upper.log_prob[s]);
        seen_lower += std::exp(backoff_log_prob(tables, h.subspan(1), w));
      }
      t.log_backoff[i] = std::log((1.0 - seen) / (1.0 - seen_lower));
    }
  }
  return NGramModel(model.vocabulary(), std::move(tables));
}

}  // namespace lmbench::kn
