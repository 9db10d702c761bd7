#include "cli/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "cli/model_spec.hpp"
#include "lmbench/arpa.hpp"
#include "lmbench/eval.hpp"
#include "lmbench/meter.hpp"
#include "lmbench/powerbench.hpp"

namespace lmbench::cli {

using nlohmann::json;

namespace {

constexpr std::size_t kNeuralSlice = 350;

json envelope(const char* kind, json config) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["kind"] = kind;
  doc["config"] = std::move(config);
  return doc;
}

// Writes through a sibling temp file so a failed command leaves no partial
// artifact behind.
template <class Write>
void commit_file(const std::string& path, Write&& write) {
  std::filesystem::path tmp = path;
  tmp += ".partial";
  try {
    write(tmp);
    std::filesystem::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

VocabSource vocab_source(const std::string& vocab, const std::string& train, const std::string& test) {
  VocabSource src;
  if (!vocab.empty()) src.vocab_file = vocab;
  if (!train.empty()) src.train_corpus = train;
  if (!test.empty()) src.fallback_corpus = test;
  return src;
}

double train_cross_entropy(const kn::NGramModel& model, const Dataset& data) {
  const auto width = static_cast<std::size_t>(model.order() - 1);
  std::vector<WordId> padded;
  double nats = 0.0;
  for (const auto& s : data.sentences) {
    padded.assign(width, model.bos_id());
    padded.insert(padded.end(), s.begin(), s.end());
    for (std::size_t t = 0; t < s.size(); ++t) {
      nats -= model.log_prob(std::span<const WordId>(padded.data() + t, width), s[t]);
    }
  }
  return nats / static_cast<double>(data.token_count);
}

// The token stream a benchmark replays, with everything a query needs
// precomputed so the timed region only does model work.
struct QueryStream {
  std::vector<WordId> target;
  std::vector<WordId> input;         // previous token, eos at sentence start
  std::vector<std::uint8_t> starts;  // 1 where a sentence begins
  std::vector<WordId> contexts;      // n-gram contexts, width per position
  std::size_t width = 0;
};

QueryStream build_stream(const Dataset& data, std::size_t slice, WordId eos, std::size_t width, WordId bos) {
  QueryStream qs;
  qs.width = width;
  for (const auto& s : data.sentences) {
    for (std::size_t t = 0; t < s.size() && qs.target.size() < slice; ++t) {
      qs.target.push_back(s[t]);
      qs.input.push_back(t == 0 ? eos : s[t - 1]);
      qs.starts.push_back(t == 0 ? 1 : 0);
      for (std::size_t j = 0; j < width; ++j) {
        const std::size_t back = width - j;  // distance to the predicted token
        qs.contexts.push_back(t >= back ? s[t - back] : bos);
      }
    }
    if (qs.target.size() >= slice) break;
  }
  return qs;
}

std::unique_ptr<power::MeterSource> make_meter(const std::string& spec) {
  if (spec == "none") return nullptr;
  if (spec.starts_with("sim:")) {
    return std::make_unique<power::SimulatedMeter>(
        power::SimulatedMeter::from_file(resolve_data_path(spec.substr(4)), power::Playback::kRealTime));
  }
  if (spec.starts_with("serial:")) return std::make_unique<power::SerialMeter>(spec.substr(7));
  throw Error("meter spec must be none, sim:<waveform> or serial:<device>, got '" + spec + "'");
}

}  // namespace

json to_json(const TrainOptions& o) {
  return {{"train", o.train}, {"order", o.order}, {"output", o.output}, {"vocab_out", o.vocab_out}, {"json", o.json}};
}

json to_json(const EvalOptions& o) {
  return {{"model", o.model},     {"test", o.test},   {"split", o.split},         {"name", o.name},
          {"dataset", o.dataset}, {"vocab", o.vocab}, {"train", o.train},         {"k", o.k},
          {"scatter", o.scatter}, {"correlate", o.correlate}, {"threads", o.threads}, {"seed", o.seed},
          {"output", o.output}};
}

json to_json(const BenchOptions& o) {
  return {{"model", o.model},
          {"test", o.test},
          {"name", o.name},
          {"dataset", o.dataset},
          {"vocab", o.vocab},
          {"train", o.train},
          {"meter", o.meter},
          {"warmup", o.warmup},
          {"queries", o.queries},
          {"slice", o.slice},
          {"seed", o.seed},
          {"idle_watts", optional_number(o.idle_watts)},
          {"idle_window", o.idle_window},
          {"energy_seconds", o.energy_seconds},
          {"output", o.output}};
}

json to_json(const ReportOptions& o) {
  return {{"inputs", o.inputs}, {"baseline", o.baseline}, {"output", o.output}};
}

json to_json(const InitOptions& o) {
  return {{"preset", o.preset}, {"vocab_size", o.vocab_size}, {"seed", o.seed}, {"output", o.output}};
}

void write_json(const json& doc, const std::string& path) {
  commit_file(path, [&](const std::filesystem::path& tmp) {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << doc.dump(2) << '\n';
    out.close();
    if (!out) throw IoError("write failed: " + path);
  });
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("'" + path + "' is not valid JSON: " + e.what());
  }
}

json cmd_train_kn(const TrainOptions& o, std::ostream& log) {
  if (o.output.empty()) throw Error("--output is required");
  const auto path = resolve_data_path(o.train);
  auto lines = read_lines(path);
  auto vocab = Vocabulary::build(lines);
  auto data = encode_lines(lines, vocab);
  auto model = kn::train_kn(data, vocab, o.order);
  commit_file(o.output, [&](const std::filesystem::path& tmp) { kn::write_arpa(model, tmp); });
  if (!o.vocab_out.empty()) {
    commit_file(o.vocab_out, [&](const std::filesystem::path& tmp) { vocab.save(tmp); });
  }

  const double ce = train_cross_entropy(model, data);
  json doc = envelope("train", to_json(o));
  doc["order"] = model.order();
  doc["vocab_size"] = vocab.size();
  doc["sentences"] = data.sentences.size();
  doc["tokens"] = data.token_count;
  json grams = json::array();
  for (int n = 1; n <= model.order(); ++n) grams.push_back(model.table(n).grams.size());
  doc["ngrams"] = grams;
  doc["train_perplexity"] = std::exp(ce);

  log << "order " << model.order() << ", vocabulary " << vocab.size() << ", " << data.sentences.size()
      << " sentences, " << data.token_count << " tokens\n";
  for (int n = 1; n <= model.order(); ++n) log << "  " << n << "-grams: " << model.table(n).grams.size() << '\n';
  log << "train perplexity " << std::exp(ce) << '\n';
  log << "wrote " << o.output << '\n';
  if (!o.json.empty()) write_json(doc, o.json);
  return doc;
}

json cmd_eval(const EvalOptions& o, std::ostream& log) {
  const auto spec = ModelSpec::parse(o.model);
  const auto test_path = resolve_data_path(o.test);
  auto loaded = load_model(spec, vocab_source(o.vocab, o.train, o.test), o.seed);
  auto data = load_dataset(test_path, loaded->vocab);
  if (o.k < 1 || o.k > loaded->lm->vocab_size()) throw Error("--k must lie in [1, vocabulary size]");

  auto result = eval::evaluate_corpus(*loaded->lm, data, o.k, o.threads);
  json doc = envelope("eval", to_json(o));
  doc["model"] = o.name.empty() ? loaded->default_name : o.name;
  doc["model_kind"] = loaded->kind;
  doc["dataset"] = o.dataset.empty() ? dataset_name_from(test_path) : o.dataset;
  doc["split"] = o.split.empty() ? split_name_from(test_path) : o.split;
  doc["vocab_size"] = loaded->vocab.size();
  doc["sentences"] = result.sentences.size();
  doc["tokens"] = result.token_count;
  doc["k"] = result.k;
  doc["cross_entropy"] = result.cross_entropy;
  doc["perplexity"] = result.perplexity;
  doc["recall_at_k"] = result.recall_at_k;

  log << doc["model"].get<std::string>() << " on " << test_path.string() << ": perplexity " << result.perplexity
      << ", R@" << result.k << ' ' << 100.0 * result.recall_at_k << "%, " << result.sentences.size()
      << " sentences\n";
  if (!o.scatter.empty()) {
    commit_file(o.scatter, [&](const std::filesystem::path& tmp) { eval::export_scatter(result.sentences, tmp); });
    log << "wrote " << o.scatter << '\n';
  }
  if (o.correlate) {
    auto c = eval::correlate(result.sentences);
    doc["correlation"] = {{"r", c.r}, {"r_squared", c.r_squared}, {"n", c.n}};
    log << "r = " << c.r << ", r^2 = " << c.r_squared << " over " << c.n << " sentences\n";
  }
  return doc;
}

json cmd_bench(const BenchOptions& o, std::ostream& log) {
  const auto spec = ModelSpec::parse(o.model);
  const auto test_path = resolve_data_path(o.test);
  auto loaded = load_model(spec, vocab_source(o.vocab, o.train, o.test), o.seed);
  auto data = load_dataset(test_path, loaded->vocab);

  const std::size_t slice = o.slice != 0 ? o.slice : spec.is_qrnn() ? kNeuralSlice : data.token_count;
  const std::size_t width = loaded->ngram ? static_cast<std::size_t>(loaded->ngram->order() - 1) : 0;
  const WordId bos = loaded->ngram ? loaded->ngram->bos_id() : 0;
  const QueryStream qs = build_stream(data, slice, loaded->vocab.eos_id(), width, bos);
  const std::size_t length = qs.target.size();

  power::BenchConfig config;
  config.warmup_queries = o.warmup;
  config.measured_queries = o.queries != 0 ? o.queries : length;
  config.idle_window = o.idle_window;
  config.energy_seconds = o.energy_seconds;
  config.query_slice = slice;
  config.idle_watts = o.idle_watts;
  config.validate();

  double sink = 0.0;
  power::QueryFn query;
  std::optional<qrnn::Decoder> decoder;
  if (loaded->ngram) {
    const auto& model = *loaded->ngram;
    query = [&](std::size_t i) {
      const std::size_t p = i % length;
      sink += model.log_prob(std::span<const WordId>(qs.contexts.data() + p * width, width), qs.target[p]);
    };
  } else {
    decoder.emplace(*loaded->network);
    query = [&](std::size_t i) {
      const std::size_t p = i % length;
      if (qs.starts[p]) decoder->reset();
      sink += decoder->step(qs.input[p])[qs.target[p]];
    };
  }

  auto meter = make_meter(o.meter);
  const auto report = power::run_bench(query, config, meter.get());
  volatile double keep = sink;  // keeps the queries observable
  (void)keep;

  json doc = envelope("bench", to_json(o));
  doc["model"] = o.name.empty() ? loaded->default_name : o.name;
  doc["model_kind"] = loaded->kind;
  doc["dataset"] = o.dataset.empty() ? dataset_name_from(test_path) : o.dataset;
  doc["slice_tokens"] = length;
  doc["ms_per_query"] = {{"mean", report.latency.mean_ms},
                         {"std", report.latency.std_ms},
                         {"min", report.latency.min_ms},
                         {"max", report.latency.max_ms},
                         {"whole_run", report.latency.whole_run_ms}};
  doc["queries"] = report.latency.queries;
  doc["total_queries"] = report.total_queries;
  doc["idle_watts"] = optional_number(report.idle_watts);
  if (report.energy) {
    const auto& e = *report.energy;
    doc["mj_per_query"] = e.mj_per_query;
    doc["energy"] = {{"joules", e.joules},           {"window_seconds", e.window_seconds},
                     {"covered_seconds", e.covered_seconds}, {"queries", e.queries},
                     {"samples", e.samples}};
  } else {
    doc["mj_per_query"] = nullptr;
    doc["energy"] = nullptr;
  }
  doc["wall_time_s"] = report.wall_time_s;

  log << doc["model"].get<std::string>() << ": " << report.latency.mean_ms << " ms/q (std "
      << report.latency.std_ms << ", " << report.latency.queries << " queries)";
  if (report.energy) log << ", " << report.energy->mj_per_query << " mJ/q above " << *report.idle_watts << " W idle";
  log << '\n';
  return doc;
}

json cmd_init_qrnn(const InitOptions& o, std::ostream& log) {
  if (o.output.empty()) throw Error("--output is required");
  auto config = qrnn::Config::named(o.preset);
  if (o.vocab_size != 0) config.vocab_size = o.vocab_size;
  auto model = qrnn::init_random(o.seed, config);
  commit_file(o.output, [&](const std::filesystem::path& tmp) { qrnn::save_weights(model, tmp); });
  json doc = envelope("init", to_json(o));
  doc["vocab_size"] = config.vocab_size;
  doc["parameters"] = model.parameter_count();
  log << "wrote " << o.output << " (" << model.parameter_count() << " parameters)\n";
  return doc;
}

}  // namespace lmbench::cli
