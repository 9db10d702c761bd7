#include "lmbench/corpus.hpp"

#include <fstream>

namespace lmbench {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

WordId Vocabulary::add(std::string_view token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const auto id = static_cast<WordId>(tokens_.size());
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), id);
  return id;
}

Vocabulary Vocabulary::build(std::span<const std::string> lines, std::string_view unk,
                             std::string_view eos) {
  Vocabulary vocab;
  for (const auto& line : lines) {
    for (auto tok : split_tokens(line)) vocab.add(tok);
  }
  if (vocab.tokens_.empty()) throw Error("empty corpus");
  vocab.unk_id_ = vocab.add(unk);
  vocab.eos_id_ = vocab.add(eos);
  if (vocab.unk_id_ == vocab.eos_id_) throw Error("unk and eos tokens must differ");
  return vocab;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens, std::string_view unk,
                                   std::string_view eos) {
  Vocabulary vocab;
  vocab.tokens_.reserve(tokens.size());
  for (auto& tok : tokens) {
    if (vocab.index_.contains(tok)) throw Error("duplicate vocabulary token '" + tok + "'");
    vocab.add(tok);
  }
  auto u = vocab.find(unk);
  auto e = vocab.find(eos);
  if (!u) throw Error("vocabulary lacks unknown-word token '" + std::string(unk) + "'");
  if (!e) throw Error("vocabulary lacks end-of-sentence token '" + std::string(eos) + "'");
  if (*u == *e) throw Error("unk and eos tokens must differ");
  vocab.unk_id_ = *u;
  vocab.eos_id_ = *e;
  return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path, std::string_view unk,
                            std::string_view eos) {
  std::vector<std::string> tokens;
  for (auto& line : read_lines(path)) {
    auto toks = split_tokens(line);
    if (toks.size() != 1) {
      throw ParseError("expected exactly one token per vocabulary line", tokens.size() + 1);
    }
    tokens.emplace_back(toks.front());
  }
  return from_tokens(std::move(tokens), unk, eos);
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const auto& tok : tokens_) out << tok << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::optional<WordId> Vocabulary::find(std::string_view token) const {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  return std::nullopt;
}

WordId Vocabulary::lookup(std::string_view token) const {
  return find(token).value_or(unk_id_);
}

const std::string& Vocabulary::token(WordId id) const {
  if (id >= tokens_.size()) throw Error("word id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::vector<WordId> Vocabulary::encode(std::string_view line) const {
  std::vector<WordId> ids;
  for (auto tok : split_tokens(line)) ids.push_back(lookup(tok));
  ids.push_back(eos_id_);
  return ids;
}

std::string Vocabulary::decode(std::span<const WordId> ids) const {
  if (!ids.empty() && ids.back() == eos_id_) ids = ids.first(ids.size() - 1);
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += token(ids[i]);
  }
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw IoError("read failed: " + path.string());
  return lines;
}

Dataset encode_lines(std::span<const std::string> lines, const Vocabulary& vocab) {
  if (lines.empty()) throw Error("empty corpus");
  Dataset data;
  data.sentences.reserve(lines.size());
  for (const auto& line : lines) {
    data.sentences.push_back(vocab.encode(line));
    data.token_count += data.sentences.back().size();
  }
  return data;
}

Dataset load_dataset(const std::filesystem::path& path, const Vocabulary& vocab) {
  auto lines = read_lines(path);
  return encode_lines(lines, vocab);
}

}  // namespace lmbench
