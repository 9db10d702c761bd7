#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lmbench/eval.hpp"
#include "lmbench/kn_model.hpp"
#include "lmbench/language_model.hpp"
#include "support.hpp"

using namespace lmbench;
using namespace lmbench::eval;

namespace {

// "train" gets the smaller id, so the 0.5/0.5 model breaks its tie toward it.
constexpr WordId kTrain = 0;
constexpr WordId kChoo = 1;
const std::vector<WordId> kChooChooTrain{kChoo, kChoo, kTrain};

UnigramModel choo_model(double p_choo) { return UnigramModel({1.0 - p_choo, p_choo}); }

struct KnFixture {
  Vocabulary vocab;
  Dataset train;
  Dataset test;
  kn::NGramModel model;
};

KnFixture kn_fixture(int order = 3) {
  auto lines = lmtest::markov_corpus(3, 400);
  auto vocab = Vocabulary::build(lines);
  auto train = encode_lines(std::span<const std::string>(lines).first(340), vocab);
  auto test = encode_lines(std::span<const std::string>(lines).subspan(340), vocab);
  auto model = kn::train_kn(train, vocab, order);
  return {std::move(vocab), std::move(train), std::move(test), std::move(model)};
}

SentenceEval point(double x, double y) {
  SentenceEval s;
  s.token_count = 1;
  s.cross_entropy = x;
  s.perplexity = std::exp(x);
  s.recall_error = y;
  return s;
}

// Top-k membership under every ranking consistent with the probabilities;
// the ascending-id ranking is the lexicographically smallest of them.
bool enumerated_top_k(const std::vector<double>& dist, WordId word, std::size_t k) {
  std::vector<WordId> perm(dist.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<WordId> chosen;
  do {
    bool sorted = true;
    for (std::size_t i = 1; i < perm.size() && sorted; ++i) sorted = dist[perm[i - 1]] >= dist[perm[i]];
    if (sorted && (chosen.empty() || perm < chosen)) chosen = perm;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::find(chosen.begin(), chosen.begin() + static_cast<std::ptrdiff_t>(k), word) !=
         chosen.begin() + static_cast<std::ptrdiff_t>(k);
}

}  // namespace

// --- worked example ---

TEST(WorkedExample, SkewedUnigramPerplexityAndRecall) {
  auto model = choo_model(0.1);
  auto ev = sentence_perplexity(model, kChooChooTrain);
  EXPECT_EQ(ev.token_count, 3u);
  EXPECT_NEAR(ev.perplexity, std::pow(0.1 * 0.1 * 0.9, -1.0 / 3.0), 1e-12);
  EXPECT_NEAR(ev.perplexity, 4.81, 0.01);
  EXPECT_EQ(recall_at_k(model, kChooChooTrain, 1), 1.0 / 3.0);
}

TEST(WorkedExample, BalancedUnigramHalvesPerplexityWithSameRecall) {
  auto skewed = choo_model(0.1);
  auto balanced = choo_model(0.5);
  EXPECT_NEAR(sentence_perplexity(balanced, kChooChooTrain).perplexity, 2.0, 1e-6);
  EXPECT_DOUBLE_EQ(recall_at_k(balanced, kChooChooTrain, 1), recall_at_k(skewed, kChooChooTrain, 1));
  EXPECT_GT(sentence_perplexity(skewed, kChooChooTrain).perplexity,
            2.0 * sentence_perplexity(balanced, kChooChooTrain).perplexity);
}

TEST(WorkedExample, EvaluateSentenceCombinesBoth) {
  auto ev = evaluate_sentence(choo_model(0.1), kChooChooTrain, 1);
  EXPECT_NEAR(ev.perplexity, 4.81, 0.01);
  EXPECT_NEAR(ev.recall_error, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(ev.perplexity, std::exp(ev.cross_entropy), 1e-9);
}

// --- perplexity ---

TEST(SentencePerplexity, UniformModelGivesVocabularySize) {
  auto model = UnigramModel::uniform(10);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<WordId> pick(0, 9);
    std::vector<WordId> s(1 + seed * 7);
    for (auto& w : s) w = pick(rng);
    EXPECT_NEAR(sentence_perplexity(model, s).perplexity, 10.0, 1e-9);
  }
}

TEST(SentencePerplexity, ZeroProbabilityIsAnError) {
  UnigramModel model({1.0, 0.0});
  std::vector<WordId> s{0, 1};
  try {
    sentence_perplexity(model, s);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "non-smoothed model");
  }
}

TEST(SentencePerplexity, RejectsEmptySentenceAndBadIds) {
  auto model = UnigramModel::uniform(4);
  EXPECT_THROW(sentence_perplexity(model, std::vector<WordId>{}), Error);
  EXPECT_THROW(sentence_perplexity(model, std::vector<WordId>{4}), Error);
}

// --- recall ---

TEST(RecallAtK, FullVocabularyAlwaysHits) {
  auto fx = kn_fixture();
  KnLanguageModel lm(fx.model);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_DOUBLE_EQ(recall_at_k(lm, fx.test.sentences[i], fx.vocab.size()), 1.0);
  }
  EXPECT_THROW(recall_at_k(lm, fx.test.sentences[0], 0), Error);
  EXPECT_THROW(recall_at_k(lm, fx.test.sentences[0], fx.vocab.size() + 1), Error);
}

TEST(RecallAtK, TieBreakMatchesExhaustiveEnumeration) {
  const double levels[] = {1.0, 2.0, 3.0};
  for (std::size_t v = 2; v <= 5; ++v) {
    std::vector<std::size_t> digits(v, 0);
    for (;;) {
      std::vector<double> dist(v);
      for (std::size_t i = 0; i < v; ++i) dist[i] = levels[digits[i]];
      for (WordId w = 0; w < v; ++w) {
        for (std::size_t k = 1; k <= v; ++k) {
          ASSERT_EQ(in_top_k(dist, w, k), enumerated_top_k(dist, w, k));
        }
      }
      std::size_t i = 0;
      while (i < v && ++digits[i] == 3) digits[i++] = 0;
      if (i == v) break;
    }
  }
}

TEST(RecallAtK, TieAtCutoffIncludesSmallerId) {
  std::vector<double> dist{0.1, 0.3, 0.3, 0.3};
  EXPECT_TRUE(in_top_k(dist, 1, 2));
  EXPECT_TRUE(in_top_k(dist, 2, 2));
  EXPECT_FALSE(in_top_k(dist, 3, 2));
  EXPECT_TRUE(in_top_k(dist, 3, 3));
}

TEST(RecallAtK, NonDecreasingInK) {
  auto fx = kn_fixture();
  KnLanguageModel lm(fx.model);
  for (std::size_t i = 0; i < 20; ++i) {
    double prev = 0.0;
    for (std::size_t k = 1; k <= fx.vocab.size(); ++k) {
      const double r = recall_at_k(lm, fx.test.sentences[i], k);
      ASSERT_GE(r, prev);
      prev = r;
    }
  }
}

// --- corpus aggregation ---

TEST(EvaluateCorpus, IdenticalSentencesGiveSentencePerplexity) {
  auto model = choo_model(0.1);
  Dataset data;
  data.sentences = {kChooChooTrain, {kTrain, kChoo, kChoo}};
  data.token_count = 6;
  auto ev = evaluate_corpus(model, data, 1);
  EXPECT_NEAR(ev.perplexity, ev.sentences[0].perplexity, 1e-12);
  EXPECT_NEAR(ev.perplexity, ev.sentences[1].perplexity, 1e-12);
  EXPECT_EQ(ev.token_count, 6u);
}

TEST(EvaluateCorpus, TokenWeightedNotSentenceAveraged) {
  auto model = choo_model(0.1);
  Dataset data;
  data.sentences = {{kChoo}, {kTrain, kTrain, kTrain}};
  data.token_count = 4;
  auto ev = evaluate_corpus(model, data, 1);
  const double expected = std::exp(-(std::log(0.1) + 3 * std::log(0.9)) / 4.0);
  EXPECT_NEAR(ev.perplexity, expected, 1e-12);
  EXPECT_NEAR(ev.recall_at_k, 0.75, 1e-15);
  const double mean_of_ppl = (ev.sentences[0].perplexity + ev.sentences[1].perplexity) / 2.0;
  EXPECT_GT(std::abs(mean_of_ppl - ev.perplexity), 1.0);
}

TEST(EvaluateCorpus, MatchesBruteForceSummation) {
  auto fx = kn_fixture();
  KnLanguageModel lm(fx.model);
  auto ev = evaluate_corpus(lm, fx.test, 3);

  double nats = 0.0;
  std::size_t tokens = 0, hits = 0;
  std::vector<double> dist(fx.vocab.size());
  for (const auto& s : fx.test.sentences) {
    for (std::size_t t = 0; t < s.size(); ++t) {
      std::span<const WordId> prefix(s.data(), t);
      // order-3 context with explicit begin padding
      std::vector<WordId> ctx(2, fx.model.bos_id());
      for (std::size_t j = 0; j < std::min<std::size_t>(2, t); ++j) ctx[1 - j] = s[t - 1 - j];
      nats -= std::log(fx.model.prob(ctx, s[t]));
      lm.next_word_distribution(prefix, dist);
      std::size_t better = 0;
      for (WordId w = 0; w < dist.size(); ++w) {
        if (dist[w] > dist[s[t]] || (dist[w] == dist[s[t]] && w < s[t])) ++better;
      }
      hits += better < 3;
      ++tokens;
    }
  }
  EXPECT_EQ(ev.token_count, tokens);
  EXPECT_NEAR(ev.cross_entropy, nats / static_cast<double>(tokens), 1e-9);
  EXPECT_NEAR(ev.recall_at_k, static_cast<double>(hits) / static_cast<double>(tokens), 1e-12);
}

TEST(EvaluateCorpus, InvariantUnderSentenceReordering) {
  auto fx = kn_fixture();
  KnLanguageModel lm(fx.model);
  auto shuffled = fx.test;
  std::mt19937_64 rng(5);
  std::shuffle(shuffled.sentences.begin(), shuffled.sentences.end(), rng);
  auto a = evaluate_corpus(lm, fx.test);
  auto b = evaluate_corpus(lm, shuffled);
  EXPECT_NEAR(a.perplexity, b.perplexity, 1e-9 * a.perplexity);
  EXPECT_NEAR(a.recall_at_k, b.recall_at_k, 1e-12);
}

TEST(EvaluateCorpus, ThreadsKeepInputOrder) {
  auto fx = kn_fixture();
  KnLanguageModel lm(fx.model);
  auto serial = evaluate_corpus(lm, fx.test, 3, 1);
  auto parallel = evaluate_corpus(lm, fx.test, 3, 4);
  ASSERT_EQ(serial.sentences.size(), parallel.sentences.size());
  for (std::size_t i = 0; i < serial.sentences.size(); ++i) {
    EXPECT_EQ(serial.sentences[i].cross_entropy, parallel.sentences[i].cross_entropy);
    EXPECT_EQ(serial.sentences[i].recall_error, parallel.sentences[i].recall_error);
  }
  EXPECT_EQ(serial.perplexity, parallel.perplexity);
}

TEST(EvaluateCorpus, RecordInvariants) {
  auto fx = kn_fixture();
  KnLanguageModel lm(fx.model);
  for (const auto& s : evaluate_corpus(lm, fx.test).sentences) {
    EXPECT_GE(s.perplexity, 1.0);
    EXPECT_GE(s.recall_error, 0.0);
    EXPECT_LE(s.recall_error, 1.0);
    EXPECT_NEAR(s.perplexity, std::exp(s.cross_entropy), 1e-9 * s.perplexity);
  }
}

TEST(EvaluateCorpus, EmptyDatasetThrows) {
  EXPECT_THROW(evaluate_corpus(UnigramModel::uniform(3), Dataset{}), Error);
}

// --- correlation ---

TEST(Correlate, ExactLines) {
  std::vector<SentenceEval> up{point(1, 0.1), point(2, 0.3), point(3, 0.5), point(4, 0.7)};
  auto r = correlate(up);
  EXPECT_NEAR(r.r, 1.0, 1e-12);
  EXPECT_EQ(r.n, 4u);
  std::vector<SentenceEval> down{point(1, 0.9), point(2, 0.6), point(3, 0.3)};
  EXPECT_NEAR(correlate(down).r, -1.0, 1e-12);
}

TEST(Correlate, HandComputedThreePoints) {
  // mean (2, 2/3); sxy = 1, sxx = 2, syy = 2/3
  std::vector<SentenceEval> pts{point(1, 0), point(2, 1), point(3, 1)};
  auto r = correlate(pts);
  EXPECT_NEAR(r.r, 1.0 / std::sqrt(2.0 * 2.0 / 3.0), 1e-12);
  EXPECT_NEAR(r.r, 0.866, 1e-3);
  EXPECT_NEAR(r.r_squared, r.r * r.r, 1e-12);
}

TEST(Correlate, DegenerateSetsThrow) {
  std::vector<SentenceEval> flat{point(1, 0.5), point(2, 0.5), point(3, 0.5)};
  try {
    correlate(flat);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "degenerate point set");
  }
  std::vector<SentenceEval> two{point(1, 0), point(2, 1)};
  EXPECT_THROW(correlate(two), Error);
}

TEST(Correlate, InvariantUnderPositiveAffineMaps) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(50), y(50);
  for (std::size_t i = 0; i < 50; ++i) {
    x[i] = g(rng);
    y[i] = 0.4 * x[i] + g(rng);
  }
  const double base = pearson(x, y).r;
  EXPECT_GT(base, -1.0);
  EXPECT_LT(base, 1.0);
  auto xs = x, ys = y;
  for (auto& v : xs) v = 3.5 * v - 7.0;
  for (auto& v : ys) v = 0.01 * v + 100.0;
  EXPECT_NEAR(pearson(xs, y).r, base, 1e-12);
  EXPECT_NEAR(pearson(x, ys).r, base, 1e-12);
  EXPECT_NEAR(pearson(xs, ys).r, base, 1e-12);
}

// --- scatter export ---

TEST(Scatter, WritesHeaderAndOneRowPerRecord) {
  lmtest::TempDir dir;
  std::vector<SentenceEval> recs{point(1.5, 0.25), point(2.0, 0.5), point(3.0, 1.0)};
  export_scatter(recs, dir / "s.csv");
  auto text = lmtest::read_file(dir / "s.csv");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  EXPECT_EQ(text.substr(0, text.find('\n')), "cross_entropy,recall_error,token_count");
}

TEST(Scatter, RoundTripPreservesCorrelation) {
  lmtest::TempDir dir;
  auto fx = kn_fixture();
  KnLanguageModel lm(fx.model);
  auto ev = evaluate_corpus(lm, fx.test);
  export_scatter(ev.sentences, dir / "s.csv");
  auto back = import_scatter(dir / "s.csv");
  ASSERT_EQ(back.size(), ev.sentences.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i].token_count, ev.sentences[i].token_count);
  EXPECT_NEAR(correlate(back).r, correlate(ev.sentences).r, 1e-7);
}

TEST(Scatter, EmptyListAndMalformedFilesThrow) {
  lmtest::TempDir dir;
  EXPECT_THROW(export_scatter({}, dir / "s.csv"), Error);
  lmtest::write_file(dir / "bad.csv", "cross_entropy,recall_error,token_count\n1.0,zero,3\n");
  try {
    import_scatter(dir / "bad.csv");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}
