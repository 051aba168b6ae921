#include <benchmark/benchmark.h>

#include "wnntk/dataset.hpp"
#include "wnntk/kernels.hpp"
#include "wnntk/model.hpp"

using namespace wnntk;

static void BM_KernelSet(benchmark::State& state) {
  const auto n = state.range(0);
  const auto m = state.range(1);
  const Dataset data = generate_dataset(n, 50, 7, TargetMode::uniform);
  const WNParams p = init_params(50, m, 1.0, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernel_set(p, data));
  }
  state.SetItemsProcessed(state.iterations() * n * n * m);
}
BENCHMARK(BM_KernelSet)->Args({8, 1024})->Args({8, 4096})->Args({32, 4096})->Unit(benchmark::kMillisecond);

static void BM_Factorization(benchmark::State& state) {
  const Dataset data = generate_dataset(8, 50, 7, TargetMode::uniform);
  const WNParams p = init_params(50, state.range(0), 0.5, 8);
  for (auto _ : state) benchmark::DoNotOptimize(lambda_via_factorization(p, data));
}
BENCHMARK(BM_Factorization)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

// Monte Carlo estimate of V_inf, G_inf and their eigenvalue error bars.
static void BM_EstimateAux(benchmark::State& state) {
  const Dataset data = generate_dataset(8, 50, 7, TargetMode::uniform);
  const auto samples = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_aux(data, 1.0, samples, 9));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EstimateAux)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
