#include <benchmark/benchmark.h>

#include "ccd/engine.hpp"
#include "ccd/experiment.hpp"
#include "ccd/world.hpp"

using namespace ccd;

namespace {

LogitVector make_logits(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  LogitVector z(n);
  for (auto& v : z) v = 16.0 * rng.uniform() - 8.0;
  return z;
}

void BM_LogSoftmax(benchmark::State& state) {
  const auto z = make_logits(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(log_softmax(z));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogSoftmax)->Arg(32)->Arg(1024)->Arg(32000);

void BM_FuseStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto zo = make_logits(n, 2), zc = make_logits(n, 3);
  BiasMap bias(n);
  for (std::size_t i = 0; i < 14 && i < n; ++i) bias.add(static_cast<TokenId>(i), i % 2 ? 1.5 : -1.5);
  ProcessorConfig proc;
  proc.top_k = 50;
  proc.top_p = 0.9;
  proc.repetition_penalty = 1.2;
  const std::vector<TokenId> history{1, 2, 3, 4, 5};
  const FusionWeights w{0.5, 0.5, true};
  for (auto _ : state) benchmark::DoNotOptimize(fuse_step(zo, zc, bias, history, w, proc));
}
BENCHMARK(BM_FuseStep)->Arg(32)->Arg(1024)->Arg(32000);

void BM_ToyGenerate(benchmark::State& state) {
  const ToyReportModel model(build_toy_lexicon(chexpert_ontology()), ToyModelParams{});
  const auto& lex = model.lexicon();
  Rng rng(4);
  const auto c = sample_case(WorldParams{}, lex, rng);
  const NoisyExpert expert(lex.ontology, 0.0, 0.0, 4);
  DecodeConfig cfg;
  for (auto _ : state) {
    ToyModelBackend backend(model, c);
    benchmark::DoNotOptimize(generate(backend, expert, c, c.prompt, lex.token_map, cfg));
  }
}
BENCHMARK(BM_ToyGenerate);

void BM_Experiment200(benchmark::State& state) {
  ExperimentConfig cfg;
  cfg.episodes = 200;
  cfg.threads = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(cfg));
}
BENCHMARK(BM_Experiment200)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
