#include <benchmark/benchmark.h>

#include "ergolab/spectral.hpp"

using namespace ergolab;

static void BM_AutocorrelationShift(benchmark::State& state) {
  const System d = System::doubling(1);
  const auto f = Observable::centered_first_bit();
  const auto maxlag = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(autocorrelation(d, f, maxlag, 1 << 18, {d.sample(0)}));
}
BENCHMARK(BM_AutocorrelationShift)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_PairCorrelation(benchmark::State& state) {
  const System d = System::doubling(1);
  const auto f = Observable::centered_first_bit();
  for (auto _ : state)
    benchmark::DoNotOptimize(pair_correlation_averages(d, f, d.sample(0), d.sample(1), {1 << 20}));
}
BENCHMARK(BM_PairCorrelation)->Unit(benchmark::kMillisecond);
