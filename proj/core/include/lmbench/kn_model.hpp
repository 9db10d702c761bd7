#pragma once

#include <span>
#include <vector>

#include "lmbench/corpus.hpp"
#include "lmbench/gram_list.hpp"
#include "lmbench/ngram_counts.hpp"

namespace lmbench::kn {

// Entries for one order. Probabilities and backoff weights are natural logs;
// a probability of -inf marks a context-only entry (it ends in the
// begin-of-sentence symbol). A backoff of 0 means "not a context".
struct OrderTable {
  GramList grams;
  std::vector<double> log_prob;
  std::vector<double> log_backoff;
};

/// Back-off n-gram model.
///
/// Word ids 0..V-1 come from the vocabulary; id V is the begin-of-sentence
/// symbol, which may appear in contexts but is never predicted. The unigram
/// table holds every id 0..V.
class NGramModel {
 public:
  /// Tables may arrive in any order; they are sorted here. Throws if a table
  /// has duplicates, if a word id is out of range, if a vocabulary word has no
  /// unigram, or if an n-gram's prefix is not stored.
  NGramModel(Vocabulary vocab, std::vector<OrderTable> tables);

  int order() const noexcept { return static_cast<int>(tables_.size()); }
  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  std::size_t vocab_size() const noexcept { return vocab_.size(); }
  WordId bos_id() const noexcept { return static_cast<WordId>(vocab_.size()); }
  const OrderTable& table(int n) const { return tables_.at(static_cast<std::size_t>(n - 1)); }

  /// ln P(word | context). Contexts longer than order-1 are truncated to their
  /// last order-1 ids.
  double log_prob(std::span<const WordId> context, WordId word) const;
  double prob(std::span<const WordId> context, WordId word) const;

  /// Writes P(w | context) for every w < vocab_size() into `out`.
  void next_word_distribution(std::span<const WordId> context, std::span<double> out) const;

 private:
  void check_context(std::span<const WordId> context) const;

  Vocabulary vocab_;
  std::vector<OrderTable> tables_;
};

/// Interpolated modified Kneser-Ney estimation from counts, rendered in
/// back-off form. `discounts` has one entry per order. Unigrams interpolate
/// with the uniform distribution over the vocabulary.
NGramModel estimate_kn(const CountTable& counts, std::span<const Discount> discounts,
                       const Vocabulary& vocab);

/// count_ngrams + estimate_discounts + estimate_kn.
NGramModel train_kn(const Dataset& data, const Vocabulary& vocab, int order = kDefaultOrder);

/// Drops orders above `order` and recomputes every backoff weight from the
/// normalization constraint.
NGramModel truncate_order(const NGramModel& model, int order);

}  // namespace lmbench::kn
