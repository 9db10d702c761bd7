#include "cli/app.hpp"

#include <ostream>

#include <CLI11.hpp>

#include "cli/commands.hpp"

namespace lmbench::cli {

namespace {

void add_model_options(CLI::App* cmd, std::string& model, std::string& test, std::string& name, std::string& dataset,
                       std::string& vocab, std::string& train, std::uint64_t& seed) {
  cmd->add_option("model", model, "kn:<arpa>, qrnn:<weights>, qrnn:random:<ptb|wt103> or qrnn:<ptb|wt103>-random")->required();
  cmd->add_option("test", test, "Test corpus, one sentence per line")->required();
  cmd->add_option("--name", name, "Method label in reports (default KN-<order> or QRNN)");
  cmd->add_option("--dataset", dataset, "Dataset label (default: file name up to the first dot)");
  cmd->add_option("--vocab", vocab, "QRNN vocabulary file, one token per line");
  cmd->add_option("--train", train, "Corpus that defines the QRNN vocabulary when --vocab is absent");
  cmd->add_option("--seed", seed, "Seed for random QRNN weights");
}

// Prints the document, or writes it to `path` and keeps the log on stdout.
void emit(const nlohmann::json& doc, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << doc.dump(2) << '\n';
  } else {
    write_json(doc, path);
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quality, latency and energy benchmarks for n-gram and QRNN language models", "lmbench"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI file of option values ([command] sections); flags take precedence");

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train-kn", "Estimate an interpolated modified Kneser-Ney model");
  train_cmd->add_option("corpus", train.train, "Training corpus, one sentence per line")->required();
  train_cmd->add_option("--order", train.order, "N-gram order")->check(CLI::Range(1, 16));
  train_cmd->add_option("-o,--output", train.output, "ARPA file to write")->required();
  train_cmd->add_option("--vocab-out", train.vocab_out, "Also write the vocabulary, one token per line");
  train_cmd->add_option("--json", train.json, "Write the summary as JSON");

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Perplexity and R@k on a test corpus");
  add_model_options(eval_cmd, ev.model, ev.test, ev.name, ev.dataset, ev.vocab, ev.train, ev.seed);
  eval_cmd->add_option("--k", ev.k, "Recall cutoff")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--split", ev.split, "valid or test (default: from the file name)")
      ->check(CLI::IsMember({"valid", "test"}));
  eval_cmd->add_option("--scatter", ev.scatter, "Write per-sentence cross entropy and recall error as CSV");
  eval_cmd->add_flag("--correlate", ev.correlate, "Report Pearson r between cross entropy and recall error");
  eval_cmd->add_option("--threads", ev.threads, "Worker threads")->check(CLI::PositiveNumber);
  eval_cmd->add_option("-o,--output", ev.output, "Write the JSON result here instead of stdout");

  BenchOptions bench;
  double idle_watts = 0.0;
  auto* bench_cmd = app.add_subcommand("bench", "Per-query latency and energy");
  add_model_options(bench_cmd, bench.model, bench.test, bench.name, bench.dataset, bench.vocab, bench.train,
                    bench.seed);
  bench_cmd->add_option("--meter", bench.meter, "none, sim:<waveform csv> or serial:<device>");
  bench_cmd->add_option("--warmup", bench.warmup, "Untimed warmup queries");
  bench_cmd->add_option("--queries", bench.queries, "Timed queries (default: one pass over the slice)");
  bench_cmd->add_option("--slice", bench.slice, "Test tokens replayed (default 350 for QRNN, all for KN)");
  auto* idle_opt =
      bench_cmd->add_option("--idle-watts", idle_watts, "Known idle power; skips the idle measurement")
          ->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--idle-window", bench.idle_window, "Seconds of idle power sampling")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--energy-seconds", bench.energy_seconds, "Minimum length of the metered run")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("-o,--output", bench.output, "Write the JSON report here instead of stdout");

  ReportOptions rep;
  auto* report_cmd = app.add_subcommand("report", "Merge eval and bench JSON into one table");
  report_cmd->add_option("inputs", rep.inputs, "eval/bench JSON files")->required();
  report_cmd->add_option("--baseline", rep.baseline, "Method prefix the ratios are taken against");
  report_cmd->add_option("-o,--output", rep.output, "Also write the merged table as JSON");

  InitOptions init;
  auto* init_cmd = app.add_subcommand("init-qrnn", "Write a randomly initialized QRNN weight file");
  init_cmd->add_option("--preset", init.preset, "ptb or wt103")->check(CLI::IsMember({"ptb", "wt103"}));
  init_cmd->add_option("--vocab-size", init.vocab_size, "Override the preset vocabulary size");
  init_cmd->add_option("--seed", init.seed, "Generator seed");
  init_cmd->add_option("-o,--output", init.output, "Weight file to write")->required();

  std::vector<const char*> argv{"lmbench"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (train_cmd->parsed()) {
      cmd_train_kn(train, out);
    } else if (eval_cmd->parsed()) {
      std::ostream& log = ev.output.empty() ? err : out;
      emit(cmd_eval(ev, log), ev.output, out);
    } else if (bench_cmd->parsed()) {
      if (idle_opt->count() > 0) bench.idle_watts = idle_watts;
      std::ostream& log = bench.output.empty() ? err : out;
      emit(cmd_bench(bench, log), bench.output, out);
    } else if (report_cmd->parsed()) {
      auto result = cmd_report(rep);
      out << result.text;
      if (!rep.output.empty()) write_json(result.json, rep.output);
    } else if (init_cmd->parsed()) {
      cmd_init_qrnn(init, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace lmbench::cli
