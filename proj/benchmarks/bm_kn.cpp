#include <benchmark/benchmark.h>

#include "corpus_gen.hpp"
#include "lmbench/kn_model.hpp"

namespace {

using namespace lmbench;

struct KnFixture {
  Vocabulary vocab;
  Dataset data;
  kn::NGramModel model;

  static KnFixture& get() {
    static KnFixture f = [] {
      auto lines = bm::synthetic_lines(20000, 2000, 1);
      auto vocab = Vocabulary::build(lines);
      auto data = encode_lines(lines, vocab);
      auto model = kn::train_kn(data, vocab, 5);
      return KnFixture{std::move(vocab), std::move(data), std::move(model)};
    }();
    return f;
  }
};

void BM_KnTrain(benchmark::State& state) {
  auto lines = bm::synthetic_lines(static_cast<std::size_t>(state.range(0)), 2000, 2);
  auto vocab = Vocabulary::build(lines);
  auto data = encode_lines(lines, vocab);
  for (auto _ : state) benchmark::DoNotOptimize(kn::train_kn(data, vocab, 5));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.token_count));
}
BENCHMARK(BM_KnTrain)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_KnProbQuery(benchmark::State& state) {
  auto& f = KnFixture::get();
  const auto& s = f.data.sentences;
  std::vector<WordId> ctx(4, f.model.bos_id());
  std::size_t i = 0, t = 0;
  for (auto _ : state) {
    const auto& sent = s[i];
    benchmark::DoNotOptimize(f.model.log_prob(ctx, sent[t]));
    ctx.erase(ctx.begin());
    ctx.push_back(sent[t]);
    if (++t == sent.size()) {
      t = 0;
      i = (i + 1) % s.size();
      std::fill(ctx.begin(), ctx.end(), f.model.bos_id());
    }
  }
}
BENCHMARK(BM_KnProbQuery);

void BM_KnDistribution(benchmark::State& state) {
  auto& f = KnFixture::get();
  std::vector<double> dist(f.vocab.size());
  std::vector<WordId> ctx{f.model.bos_id(), f.model.bos_id(), 3, 1};
  for (auto _ : state) {
    f.model.next_word_distribution(ctx, dist);
    benchmark::DoNotOptimize(dist.data());
  }
}
BENCHMARK(BM_KnDistribution);

}  // namespace
