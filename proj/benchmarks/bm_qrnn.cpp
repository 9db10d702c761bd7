#include <benchmark/benchmark.h>

#include "lmbench/qrnn.hpp"

namespace {

using namespace lmbench;

// Range: 0 = small test shape, 1 = ptb preset.
qrnn::Config config_for(std::int64_t which) {
  if (which == 1) return qrnn::Config::ptb();
  qrnn::Config c;
  c.vocab_size = 2000;
  c.embed_dim = 128;
  c.hidden_dim = 256;
  return c;
}

void BM_QrnnDecodeStep(benchmark::State& state) {
  auto model = qrnn::init_random(1, config_for(state.range(0)));
  qrnn::Decoder dec(model);
  WordId token = 0;
  for (auto _ : state) {
    auto p = dec.step(token);
    benchmark::DoNotOptimize(p.data());
    token = (token + 7) % static_cast<WordId>(model.vocab_size());
  }
}
BENCHMARK(BM_QrnnDecodeStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_QrnnForward(benchmark::State& state) {
  auto model = qrnn::init_random(2, config_for(0));
  std::vector<WordId> ids(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<WordId>((i * 13) % model.vocab_size());
  for (auto _ : state) benchmark::DoNotOptimize(qrnn::forward(model, ids));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_QrnnForward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Softmax(benchmark::State& state) {
  std::vector<float> logits(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] = static_cast<float>((i * 37) % 101) * 0.01f;
  std::vector<double> out(logits.size());
  for (auto _ : state) {
    qrnn::softmax_into(logits, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_Softmax)->Arg(10000)->Arg(267000);

}  // namespace
