#pragma once

#include <random>
#include <string>
#include <vector>

namespace bm {

// Zipf-ish synthetic text; enough structure to populate every n-gram order.
inline std::vector<std::string> synthetic_lines(std::size_t sentences, std::size_t vocab, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> weights(vocab);
  for (std::size_t i = 0; i < vocab; ++i) weights[i] = 1.0 / static_cast<double>(i + 1);
  std::discrete_distribution<std::size_t> word(weights.begin(), weights.end());
  std::uniform_int_distribution<int> length(5, 25);
  std::vector<std::string> out;
  out.reserve(sentences);
  for (std::size_t s = 0; s < sentences; ++s) {
    std::string line;
    for (int t = length(rng); t > 0; --t) {
      if (!line.empty()) line += ' ';
      line += "w" + std::to_string(word(rng));
    }
    out.push_back(std::move(line));
  }
  return out;
}

}  // namespace bm
