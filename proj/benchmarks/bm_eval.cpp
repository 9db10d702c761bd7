#include <benchmark/benchmark.h>

#include "corpus_gen.hpp"
#include "lmbench/eval.hpp"
#include "lmbench/kn_model.hpp"

namespace {

using namespace lmbench;

void BM_EvaluateCorpusKn(benchmark::State& state) {
  auto lines = bm::synthetic_lines(4000, 1000, 3);
  auto vocab = Vocabulary::build(lines);
  auto data = encode_lines(lines, vocab);
  auto model = kn::train_kn(data, vocab, 5);
  KnLanguageModel lm(model);
  Dataset test;
  test.sentences.assign(data.sentences.begin(), data.sentences.begin() + 200);
  for (const auto& s : test.sentences) test.token_count += s.size();
  for (auto _ : state) benchmark::DoNotOptimize(eval::evaluate_corpus(lm, test, 3));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(test.token_count));
}
BENCHMARK(BM_EvaluateCorpusKn)->Unit(benchmark::kMillisecond);

void BM_InTopK(benchmark::State& state) {
  std::vector<double> dist(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < dist.size(); ++i) dist[i] = 1.0 / static_cast<double>(i % 97 + 1);
  WordId w = 50;
  for (auto _ : state) {
    benchmark::ClobberMemory();
    benchmark::DoNotOptimize(eval::in_top_k(dist, w, 3));
  }
}
BENCHMARK(BM_InTopK)->Arg(10000);

}  // namespace
