#include <benchmark/benchmark.h>

#include "wnntk/dataset.hpp"
#include "wnntk/gradients.hpp"
#include "wnntk/model.hpp"

using namespace wnntk;

static void BM_GradLoss(benchmark::State& state) {
  const Dataset data = generate_dataset(8, 50, 7, TargetMode::uniform);
  const WNParams p = init_params(50, state.range(0), 1.0, 8);
  for (auto _ : state) benchmark::DoNotOptimize(grad_loss(p, data));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GradLoss)->RangeMultiplier(4)->Range(256, 16384);

static void BM_Predict(benchmark::State& state) {
  const Dataset data = generate_dataset(8, 50, 7, TargetMode::uniform);
  const WNParams p = init_params(50, state.range(0), 1.0, 8);
  for (auto _ : state) benchmark::DoNotOptimize(predict(p, data.X));
}
BENCHMARK(BM_Predict)->RangeMultiplier(4)->Range(256, 16384);
