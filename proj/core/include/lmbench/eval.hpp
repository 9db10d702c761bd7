#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "lmbench/corpus.hpp"
#include "lmbench/language_model.hpp"

namespace lmbench::eval {

inline constexpr std::size_t kDefaultK = 3;

/// Per-sentence quality record; cross entropy is in nats per token.
struct SentenceEval {
  std::size_t token_count = 0;
  double cross_entropy = 0.0;
  double perplexity = 1.0;
  double recall_error = 0.0;  // 1 - R@k
};

struct CorpusEval {
  std::vector<SentenceEval> sentences;
  std::size_t k = kDefaultK;
  std::size_t token_count = 0;
  double cross_entropy = 0.0;  // token-weighted
  double perplexity = 1.0;
  double recall_at_k = 0.0;    // token-weighted
};

struct CorrelationReport {
  double r = 0.0;
  double r_squared = 0.0;
  std::size_t n = 0;
};

/// True iff `word` ranks among the k most probable entries, ties broken by
/// ascending word id.
bool in_top_k(std::span<const double> distribution, WordId word, std::size_t k);

/// Entropy fields only; recall_error is left at zero. Throws
/// Error("non-smoothed model") when a token receives probability zero.
SentenceEval sentence_perplexity(const LanguageModel& model, std::span<const WordId> sentence);

double recall_at_k(const LanguageModel& model, std::span<const WordId> sentence, std::size_t k);

/// Entropy and recall from one pass over the sentence.
SentenceEval evaluate_sentence(const LanguageModel& model, std::span<const WordId> sentence, std::size_t k);

/// Sentences are scored independently; with threads > 1 they are split into
/// contiguous chunks and results keep input order.
CorpusEval evaluate_corpus(const LanguageModel& model, const Dataset& data, std::size_t k = kDefaultK,
                           unsigned threads = 1);

/// Pearson r between cross_entropy (x) and recall_error (y). Needs n >= 3 and
/// non-zero variance in both coordinates.
CorrelationReport correlate(std::span<const SentenceEval> records);
CorrelationReport pearson(std::span<const double> x, std::span<const double> y);

/// CSV "cross_entropy,recall_error,token_count", 9 significant digits.
void export_scatter(std::span<const SentenceEval> records, const std::filesystem::path& path);
std::vector<SentenceEval> import_scatter(const std::filesystem::path& path);

}  // namespace lmbench::eval
