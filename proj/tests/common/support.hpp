#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace lmtest {

// Directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "lmbench-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return path;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Sentences from a first-order Markov chain over `words` symbols with a
// skewed, seed-dependent transition table.
inline std::vector<std::string> markov_corpus(std::uint64_t seed, std::size_t sentences, std::size_t words = 12,
                                              std::uint64_t table_seed = 7) {
  std::mt19937_64 table_rng(table_seed);
  std::vector<std::vector<double>> weights(words + 1, std::vector<double>(words + 1));
  std::exponential_distribution<double> expo(1.0);
  for (auto& row : weights) {
    for (auto& w : row) w = std::pow(expo(table_rng), 3.0);
  }
  std::mt19937_64 rng(seed);
  std::vector<std::string> out;
  for (std::size_t s = 0; s < sentences; ++s) {
    std::string line;
    std::size_t prev = words;  // start state
    for (std::size_t len = 0; len < 30; ++len) {
      std::discrete_distribution<std::size_t> next(weights[prev].begin(), weights[prev].end());
      std::size_t w = next(rng);
      if (w == words && len > 0) break;  // end of sentence
      if (w == words) w = 0;
      if (!line.empty()) line += ' ';
      line += "w" + std::to_string(w);
      prev = w;
    }
    out.push_back(line);
  }
  return out;
}

}  // namespace lmtest
