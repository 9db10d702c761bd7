#include <gtest/gtest.h>

#include <algorithm>

#include "lmbench/corpus.hpp"
#include "support.hpp"

using namespace lmbench;

TEST(Vocabulary, ChooChooTrainHasFourEntries) {
  std::vector<std::string> lines{"choo choo train"};
  auto v = Vocabulary::build(lines);
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.find("choo"), 0u);
  EXPECT_EQ(v.find("train"), 1u);
  EXPECT_EQ(v.token(v.unk_id()), "<unk>");
  EXPECT_EQ(v.token(v.eos_id()), "</s>");
  EXPECT_NE(v.unk_id(), v.eos_id());
}

TEST(Vocabulary, LiteralUnkIsNotDuplicated) {
  std::vector<std::string> lines{"a <unk> b", "<unk> c"};
  auto v = Vocabulary::build(lines);
  EXPECT_EQ(v.size(), 5u);  // a <unk> b c </s>
  EXPECT_EQ(v.unk_id(), 1u);
  EXPECT_EQ(std::count(v.tokens().begin(), v.tokens().end(), "<unk>"), 1);
}

TEST(Vocabulary, EmptyCorpusThrows) {
  std::vector<std::string> none;
  EXPECT_THROW(Vocabulary::build(none), Error);
  std::vector<std::string> blank{"", "   "};
  try {
    Vocabulary::build(blank);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "empty corpus");
  }
}

TEST(Vocabulary, IdsAndIndexAreMutuallyInverse) {
  auto lines = lmtest::markov_corpus(3, 50);
  auto v = Vocabulary::build(lines);
  for (WordId id = 0; id < v.size(); ++id) EXPECT_EQ(v.find(v.token(id)), id);
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  lmtest::TempDir dir;
  std::vector<std::string> lines{"x y z", "z q"};
  auto v = Vocabulary::build(lines);
  v.save(dir / "vocab.txt");
  auto w = Vocabulary::load(dir / "vocab.txt");
  EXPECT_EQ(w.tokens(), v.tokens());
  EXPECT_EQ(w.unk_id(), v.unk_id());
  EXPECT_EQ(w.eos_id(), v.eos_id());
}

TEST(Vocabulary, FromTokensRejectsDuplicatesAndMissingMarkers) {
  EXPECT_THROW(Vocabulary::from_tokens({"a", "a", "<unk>", "</s>"}), Error);
  EXPECT_THROW(Vocabulary::from_tokens({"a", "</s>"}), Error);
  EXPECT_THROW(Vocabulary::from_tokens({"a", "<unk>"}), Error);
}

TEST(Encode, MapsTokensAndAppendsEos) {
  std::vector<std::string> lines{"choo choo train"};
  auto v = Vocabulary::build(lines);
  EXPECT_EQ(v.encode("choo choo train"), (std::vector<WordId>{0, 0, 1, v.eos_id()}));
  EXPECT_EQ(v.encode(""), (std::vector<WordId>{v.eos_id()}));
  EXPECT_EQ(v.encode("xylophone"), (std::vector<WordId>{v.unk_id(), v.eos_id()}));
}

TEST(Encode, DecodeRoundTripsInVocabularyText) {
  auto lines = lmtest::markov_corpus(5, 40);
  auto v = Vocabulary::build(lines);
  for (const auto& line : lines) EXPECT_EQ(v.decode(v.encode(line)), line);
}

TEST(Dataset, TwoLineFile) {
  lmtest::TempDir dir;
  auto path = lmtest::write_file(dir / "toy.txt", "a b\nc\n");
  std::vector<std::string> lines{"a b c"};
  auto v = Vocabulary::build(lines);
  auto d = load_dataset(path, v);
  ASSERT_EQ(d.sentences.size(), 2u);
  EXPECT_EQ(d.token_count, 5u);
  for (const auto& s : d.sentences) {
    ASSERT_FALSE(s.empty());
    EXPECT_EQ(s.back(), v.eos_id());
  }
}

TEST(Dataset, EmptyFileIsEmptyCorpus) {
  lmtest::TempDir dir;
  auto path = lmtest::write_file(dir / "empty.txt", "");
  std::vector<std::string> lines{"a"};
  auto v = Vocabulary::build(lines);
  try {
    load_dataset(path, v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "empty corpus");
  }
}

TEST(Dataset, MissingFileIsIoError) {
  std::vector<std::string> lines{"a"};
  auto v = Vocabulary::build(lines);
  EXPECT_THROW(load_dataset("/nonexistent/corpus.txt", v), IoError);
}

TEST(Dataset, CrlfLinesAreStripped) {
  lmtest::TempDir dir;
  auto path = lmtest::write_file(dir / "crlf.txt", "a b\r\nb a\r\n");
  std::vector<std::string> lines{"a b"};
  auto v = Vocabulary::build(lines);
  auto d = load_dataset(path, v);
  EXPECT_EQ(d.sentences[0], (std::vector<WordId>{0, 1, v.eos_id()}));
}

TEST(DatasetProperty, TokenCountInvariantUnderReordering) {
  auto lines = lmtest::markov_corpus(11, 80);
  auto v = Vocabulary::build(lines);
  auto a = encode_lines(lines, v);
  std::vector<std::string> shuffled(lines.rbegin(), lines.rend());
  std::mt19937 rng(1);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  auto b = encode_lines(shuffled, v);
  EXPECT_EQ(a.token_count, b.token_count);
}

TEST(DatasetProperty, EncodingIsDeterministic) {
  auto lines = lmtest::markov_corpus(12, 60);
  auto v1 = Vocabulary::build(lines);
  auto v2 = Vocabulary::build(lines);
  EXPECT_EQ(v1.tokens(), v2.tokens());
  auto a = encode_lines(lines, v1);
  auto b = encode_lines(lines, v2);
  EXPECT_EQ(a.sentences, b.sentences);
  EXPECT_EQ(a.token_count, b.token_count);
}

TEST(DatasetProperty, EveryIdInRangeAndSentencesEndWithEos) {
  auto lines = lmtest::markov_corpus(13, 60);
  auto v = Vocabulary::build(lines);
  auto d = encode_lines(lines, v);
  std::size_t total = 0;
  for (const auto& s : d.sentences) {
    ASSERT_FALSE(s.empty());
    EXPECT_EQ(s.back(), v.eos_id());
    for (auto id : s) EXPECT_LT(id, v.size());
    total += s.size();
  }
  EXPECT_EQ(total, d.token_count);
}
