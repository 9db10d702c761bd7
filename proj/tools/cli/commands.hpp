#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace lmbench::cli {

inline constexpr int kFormatVersion = 1;

struct TrainOptions {
  std::string train;
  int order = 5;
  std::string output;
  std::string vocab_out;
  std::string json;
};

struct EvalOptions {
  std::string model;
  std::string test;
  std::string split;    // empty: derived from the file name
  std::string name;     // empty: model default
  std::string dataset;  // empty: derived from the file name
  std::string vocab;
  std::string train;
  std::size_t k = 3;
  std::string scatter;
  bool correlate = false;
  unsigned threads = 1;
  std::uint64_t seed = 0;
  std::string output;
};

struct BenchOptions {
  std::string model;
  std::string test;
  std::string name;
  std::string dataset;
  std::string vocab;
  std::string train;
  std::string meter = "none";
  std::size_t warmup = 50;
  std::size_t queries = 0;  // 0: one pass over the slice
  std::size_t slice = 0;    // 0: 350 for neural models, whole test set for KN
  std::uint64_t seed = 0;
  std::optional<double> idle_watts;
  double idle_window = 10.0;
  double energy_seconds = 5.0;
  std::string output;
};

struct ReportOptions {
  std::vector<std::string> inputs;
  std::string baseline = "KN";
  std::string output;
};

struct InitOptions {
  std::string preset = "ptb";
  std::size_t vocab_size = 0;  // 0: preset default
  std::uint64_t seed = 0;
  std::string output;
};

nlohmann::json to_json(const TrainOptions& o);
nlohmann::json to_json(const EvalOptions& o);
nlohmann::json to_json(const BenchOptions& o);
nlohmann::json to_json(const ReportOptions& o);
nlohmann::json to_json(const InitOptions& o);

// Each command returns its JSON document; `log` receives human-readable lines.
nlohmann::json cmd_train_kn(const TrainOptions& o, std::ostream& log);
nlohmann::json cmd_eval(const EvalOptions& o, std::ostream& log);
nlohmann::json cmd_bench(const BenchOptions& o, std::ostream& log);
nlohmann::json cmd_init_qrnn(const InitOptions& o, std::ostream& log);

struct ReportResult {
  nlohmann::json json;
  std::string text;
};
ReportResult cmd_report(const ReportOptions& o);
/// Table-2 style rendering of a report document.
std::string render_table(const nlohmann::json& report);

/// Writes `doc` pretty-printed with a trailing newline.
void write_json(const nlohmann::json& doc, const std::string& path);
nlohmann::json read_json(const std::string& path);

}  // namespace lmbench::cli
