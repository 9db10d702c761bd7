#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "lmbench/kn_model.hpp"

namespace lmbench::kn {

inline constexpr std::string_view kArpaBos = "<s>";

struct ArpaOptions {
  std::string_view unk = Vocabulary::kDefaultUnk;
  std::string_view eos = Vocabulary::kDefaultEos;
  std::string_view bos = kArpaBos;
};

// Writes the ARPA text layout. Values are log10 in shortest round-trip form;
// context-only entries get probability -99 and a zero backoff is omitted.
void write_arpa(const NGramModel& model, std::ostream& out, const ArpaOptions& opts = {});
void write_arpa(const NGramModel& model, const std::filesystem::path& path,
                const ArpaOptions& opts = {});

// Vocabulary ids follow unigram order, skipping the begin-of-sentence token.
// Probabilities at or below -99 read as zero. Throws ParseError naming the
// offending line.
NGramModel read_arpa(std::istream& in, const ArpaOptions& opts = {});
NGramModel read_arpa(const std::filesystem::path& path, const ArpaOptions& opts = {});

}  // namespace lmbench::kn
