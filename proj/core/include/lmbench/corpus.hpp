#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lmbench/common.hpp"

namespace lmbench {

/// Token <-> id mapping with dense ids and distinguished unknown-word and
/// end-of-sentence tokens.
///
/// Ids are assigned in first-occurrence order. The unk and eos markers take
/// their first-occurrence position when they appear in the text and are
/// appended (unk first) otherwise.
class Vocabulary {
 public:
  static constexpr std::string_view kDefaultUnk = "<unk>";
  static constexpr std::string_view kDefaultEos = "</s>";

  /// Builds a vocabulary from whitespace-tokenized lines.
  /// Throws Error("empty corpus") if the lines contain no tokens.
  static Vocabulary build(std::span<const std::string> lines,
                          std::string_view unk = kDefaultUnk,
                          std::string_view eos = kDefaultEos);

  /// Wraps an explicit token list; line/position i becomes id i. Both markers
  /// must be present and every token must be unique.
  static Vocabulary from_tokens(std::vector<std::string> tokens,
                                std::string_view unk = kDefaultUnk,
                                std::string_view eos = kDefaultEos);

  /// One token per line, line number = id.
  static Vocabulary load(const std::filesystem::path& path,
                         std::string_view unk = kDefaultUnk,
                         std::string_view eos = kDefaultEos);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const noexcept { return tokens_.size(); }
  WordId unk_id() const noexcept { return unk_id_; }
  WordId eos_id() const noexcept { return eos_id_; }

  std::optional<WordId> find(std::string_view token) const;
  /// Like find() but maps misses to unk_id().
  WordId lookup(std::string_view token) const;
  const std::string& token(WordId id) const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  /// Maps each token to its id (misses become unk) and appends eos.
  std::vector<WordId> encode(std::string_view line) const;
  /// Inverse of encode for in-vocabulary text; a trailing eos is dropped.
  std::string decode(std::span<const WordId> ids) const;

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };

  Vocabulary() = default;
  WordId add(std::string_view token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, WordId, StringHash, std::equal_to<>> index_;
  WordId unk_id_ = 0;
  WordId eos_id_ = 0;
};

/// Encoded sentences; each is terminated by the vocabulary's eos id.
struct Dataset {
  std::vector<std::vector<WordId>> sentences;
  std::size_t token_count = 0;

  bool empty() const noexcept { return sentences.empty(); }
};

/// Splits on runs of ASCII whitespace.
std::vector<std::string_view> split_tokens(std::string_view line);

/// Reads a text file into lines (without terminators). Throws IoError.
std::vector<std::string> read_lines(const std::filesystem::path& path);

Dataset encode_lines(std::span<const std::string> lines, const Vocabulary& vocab);

/// One sentence per line. Throws IoError if unreadable and
/// Error("empty corpus") if the file has no lines.
Dataset load_dataset(const std::filesystem::path& path, const Vocabulary& vocab);

}  // namespace lmbench
