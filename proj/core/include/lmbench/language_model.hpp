#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lmbench/common.hpp"
#include "lmbench/kn_model.hpp"

namespace lmbench {

// Receives the predictive distribution for sentence[position] given
// sentence[0..position).
using PositionVisitor = std::function<void(std::size_t position, std::span<const double> distribution)>;

/// The query surface shared by every model the evaluation and benchmark code
/// drives. Distributions cover ids 0..vocab_size()-1 and sum to one.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual std::size_t vocab_size() const = 0;
  virtual void next_word_distribution(std::span<const WordId> context, std::span<double> out) const = 0;
  virtual double prob(std::span<const WordId> context, WordId word) const;

  /// Visits every position of `sentence` in order. The default re-queries each
  /// prefix; stateful models override it with a single left-to-right pass.
  virtual void score_sentence(std::span<const WordId> sentence, const PositionVisitor& visit) const;
};

/// Context-free model with explicit probabilities.
class UnigramModel final : public LanguageModel {
 public:
  /// Probabilities must be non-negative and sum to one within 1e-9.
  explicit UnigramModel(std::vector<double> probs);
  static UnigramModel uniform(std::size_t vocab_size);

  std::size_t vocab_size() const override { return probs_.size(); }
  void next_word_distribution(std::span<const WordId> context, std::span<double> out) const override;
  double prob(std::span<const WordId> context, WordId word) const override;

 private:
  std::vector<double> probs_;
};

/// Adapter over a back-off n-gram model. Sentences are scored with the
/// begin-of-sentence padding the model was trained with.
class KnLanguageModel final : public LanguageModel {
 public:
  explicit KnLanguageModel(const kn::NGramModel& model) : model_(model) {}

  std::size_t vocab_size() const override { return model_.vocab_size(); }
  void next_word_distribution(std::span<const WordId> context, std::span<double> out) const override;
  double prob(std::span<const WordId> context, WordId word) const override;
  void score_sentence(std::span<const WordId> sentence, const PositionVisitor& visit) const override;

  const kn::NGramModel& model() const noexcept { return model_; }

 private:
  const kn::NGramModel& model_;
};

}  // namespace lmbench
