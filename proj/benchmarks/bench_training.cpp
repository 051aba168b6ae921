#include <benchmark/benchmark.h>

#include "wnntk/dataset.hpp"
#include "wnntk/model.hpp"
#include "wnntk/trainer.hpp"

using namespace wnntk;

static void BM_GdStep(benchmark::State& state) {
  const Dataset data = generate_dataset(8, 50, 7, TargetMode::uniform);
  WNParams p = init_params(50, state.range(0), 1.0, 8);
  for (auto _ : state) {
    p = gd_step(p, data, 1e-3);
    benchmark::DoNotOptimize(p.V.data());
  }
}
BENCHMARK(BM_GdStep)->Arg(1024)->Arg(4096);

// 100 steps with kernel diagnostics recorded every step.
static void BM_Train(benchmark::State& state) {
  const Dataset data = generate_dataset(8, 50, 7, TargetMode::uniform);
  const WNParams p = init_params(50, 2048, 1.0, 8);
  TrainConfig cfg;
  cfg.steps = 100;
  cfg.record_every = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(train(p, data, cfg));
}
BENCHMARK(BM_Train)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);
