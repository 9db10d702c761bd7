#include "lmbench/language_model.hpp"

#include <cmath>
#include <numeric>

namespace lmbench {

double LanguageModel::prob(std::span<const WordId> context, WordId word) const {
  if (word >= vocab_size()) throw Error("word id " + std::to_string(word) + " out of range");
  std::vector<double> dist(vocab_size());
  next_word_distribution(context, dist);
  return dist[word];
}

void LanguageModel::score_sentence(std::span<const WordId> sentence, const PositionVisitor& visit) const {
  std::vector<double> dist(vocab_size());
  for (std::size_t t = 0; t < sentence.size(); ++t) {
    next_word_distribution(sentence.first(t), dist);
    visit(t, dist);
  }
}

UnigramModel::UnigramModel(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw Error("unigram model needs at least one word");
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0)) throw Error("unigram probabilities must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("unigram probabilities must sum to one");
}

UnigramModel UnigramModel::uniform(std::size_t vocab_size) {
  if (vocab_size == 0) throw Error("unigram model needs at least one word");
  return UnigramModel(std::vector<double>(vocab_size, 1.0 / static_cast<double>(vocab_size)));
}

void UnigramModel::next_word_distribution(std::span<const WordId>, std::span<double> out) const {
  if (out.size() != probs_.size()) throw ShapeError("distribution buffer must have vocabulary size");
  std::copy(probs_.begin(), probs_.end(), out.begin());
}

double UnigramModel::prob(std::span<const WordId>, WordId word) const {
  if (word >= probs_.size()) throw Error("word id " + std::to_string(word) + " out of range");
  return probs_[word];
}

namespace {

std::vector<WordId> padded_context(const kn::NGramModel& model, std::span<const WordId> prefix) {
  const auto width = static_cast<std::size_t>(model.order() - 1);
  std::vector<WordId> ctx(width, model.bos_id());
  const auto take = std::min(width, prefix.size());
  std::copy(prefix.end() - static_cast<std::ptrdiff_t>(take), prefix.end(), ctx.end() - static_cast<std::ptrdiff_t>(take));
  return ctx;
}

}  // namespace

void KnLanguageModel::next_word_distribution(std::span<const WordId> context, std::span<double> out) const {
  model_.next_word_distribution(padded_context(model_, context), out);
}

double KnLanguageModel::prob(std::span<const WordId> context, WordId word) const {
  return model_.prob(padded_context(model_, context), word);
}

void KnLanguageModel::score_sentence(std::span<const WordId> sentence, const PositionVisitor& visit) const {
  const auto width = static_cast<std::size_t>(model_.order() - 1);
  std::vector<WordId> padded(width, model_.bos_id());
  padded.insert(padded.end(), sentence.begin(), sentence.end());
  std::vector<double> dist(vocab_size());
  for (std::size_t t = 0; t < sentence.size(); ++t) {
    model_.next_word_distribution(std::span<const WordId>(padded.data() + t, width), dist);
    visit(t, dist);
  }
}

}  // namespace lmbench
