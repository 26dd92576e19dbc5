#include <benchmark/benchmark.h>

#include "ergolab/bfko.hpp"
#include "ergolab/random.hpp"

using namespace ergolab;

namespace {

const std::vector<Complex> kPm = {-1.0, 1.0};

std::vector<std::int32_t> bits(std::size_t n, std::uint64_t seed) {
  std::vector<std::int32_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::int32_t>(hash64(seed, static_cast<std::int64_t>(i)) & 1);
  return out;
}

}  // namespace

static void BM_ShiftFamilyBuild(benchmark::State& state) {
  const auto lags_n = static_cast<std::uint64_t>(state.range(0));
  const auto series = bits(lags_n + 2048, 1);
  std::vector<std::uint64_t> lags;
  for (std::uint64_t m = 1; m <= lags_n; ++m) lags.push_back(m);
  for (auto _ : state) benchmark::DoNotOptimize(collect_shift_blocks(kPm, series, lags, 64, 2048));
}
BENCHMARK(BM_ShiftFamilyBuild)->Arg(1 << 12)->Arg(1 << 16)->Unit(benchmark::kMillisecond);

static void BM_ShiftFamilyContains(benchmark::State& state) {
  const auto series = bits((1 << 16) + 2048, 1);
  std::vector<std::uint64_t> lags;
  for (std::uint64_t m = 1; m <= (1 << 16); ++m) lags.push_back(m);
  const auto fam = collect_shift_blocks(kPm, series, lags, 64, 2048);
  std::int64_t i = 0;
  for (auto _ : state) {
    const auto start = static_cast<std::size_t>(hash64(2, i++) % (1 << 16)) + 1;
    benchmark::DoNotOptimize(fam.contains(series.data() + start, 1024));
  }
}
BENCHMARK(BM_ShiftFamilyContains);

static void BM_BuildLayers(benchmark::State& state) {
  LayerConstants k;
  k.j_count = 3;
  k.a = 0.9;
  k.c = 0.5;
  k.delta = 0.45;
  k.delta1 = 0.01;
  k.delta2 = 0.002;
  k.k = 1;
  k.windows = {{59, 61}, {122, 124}, {247, 249}};
  k.n = static_cast<std::uint64_t>(state.range(0));
  const auto series = bits(1024, 3);
  std::vector<std::uint64_t> lags;
  for (std::uint64_t m = 1; m <= 249; ++m) lags.push_back(m);
  const auto fam = collect_shift_blocks(kPm, series, lags, 59, 124);
  const std::vector<std::int32_t> reference(series.begin(), series.begin() + 249);
  const auto visits = VisitPattern::synthetic(k.n, k.windows, k.k, 0.99, 4);
  for (auto _ : state) {
    auto st = build_layers(k, visits, kPm, reference, fam, {true});
    benchmark::DoNotOptimize(audit_layers(st));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildLayers)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);
