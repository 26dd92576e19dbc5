#include <benchmark/benchmark.h>

#include "ergolab/averaging.hpp"

using namespace ergolab;

static void BM_RotationIndicator(benchmark::State& state) {
  const System rot = System::rotation(Angle::golden(), 1);
  const auto f = Observable::indicator(MeasurableSet::arc(0, 0.5));
  const auto n = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(birkhoff_average(rot, rot.sample(0), f, {n}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RotationIndicator)->Arg(1 << 16)->Arg(1 << 20);

static void BM_DoublingBitWindow(benchmark::State& state) {
  const System d = System::doubling(1);
  const auto f = Observable::bit_window(0, 3, {0, 1, 2, 3, 4, 5, 6, 7});
  const auto n = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(birkhoff_average(d, d.sample(0), f, {n}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DoublingBitWindow)->Arg(1 << 16)->Arg(1 << 20);

static void BM_ReturnTimeWeighted(benchmark::State& state) {
  const System rot = System::rotation(Angle::golden(), 1);
  const System d = System::doubling(2);
  const auto n = static_cast<std::uint64_t>(state.range(0));
  const auto w = WeightSequence::return_times(rot, rot.sample(0), MeasurableSet::arc(0, 0.5), n);
  for (auto _ : state) benchmark::DoNotOptimize(weighted_average(w, d, d.sample(0), Observable::first_bit(), {n}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ReturnTimeWeighted)->Arg(1 << 20);

static void BM_UnionCover(benchmark::State& state) {
  const System rot = System::rotation(Angle::golden(), 1);
  const auto b = MeasurableSet::arc(0, 0.01);
  for (auto _ : state) benchmark::DoNotOptimize(union_cover(rot, b, Rational(1, 100)));
}
BENCHMARK(BM_UnionCover);
