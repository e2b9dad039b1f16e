#include <benchmark/benchmark.h>

#include "cdc/estimation.hpp"
#include "cdc/imaging.hpp"
#include "cdc/photon_stats.hpp"
#include "cdc/simulator.hpp"

namespace {

using namespace cdc;

const ThermalModeParams kBench(1.0, ComplexCoherence(0.096, 4.11));

void BM_CoincidenceProb(benchmark::State& state) {
  const int total = static_cast<int>(state.range(0));
  for (auto _ : state) {
    double acc = 0.0;
    for (int x = 0; x <= total; ++x) acc += coincidence_prob({x, total - x}, kBench, 0.7);
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_CoincidenceProb)->Arg(2)->Arg(6)->Arg(20)->Arg(40);

void BM_OutcomeTable(benchmark::State& state) {
  for (auto _ : state) {
    auto table = make_outcome_table(kBench, 0.7, 1e-10);
    benchmark::DoNotOptimize(table);
  }
}
BENCHMARK(BM_OutcomeTable);

void BM_SampleEvents(benchmark::State& state) {
  const auto schedule = PhaseSchedule::uniform_grid(35);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto ds = sample_events(kBench, schedule, n, seed++);
    benchmark::DoNotOptimize(ds);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_SampleEvents)->Arg(1000)->Arg(10000);

void BM_MleEstimate(benchmark::State& state) {
  const auto ds = sample_events(kBench, PhaseSchedule::uniform_grid(35),
                                static_cast<std::size_t>(state.range(0)), 42);
  for (auto _ : state) {
    auto est = mle_estimate(ds);
    benchmark::DoNotOptimize(est);
  }
}
BENCHMARK(BM_MleEstimate)->Arg(1000)->Arg(10000);

void BM_ForwardCoherenceMap(benchmark::State& state) {
  const auto scene = make_test_pattern(51, 51, 0.7e-6);
  const double pitch = matched_detector_pitch(700e-9, 8.67, 51 * 0.7e-6);
  const DetectorArray array{static_cast<int>(state.range(0)), pitch, 8.67, 700e-9};
  for (auto _ : state) {
    auto map = forward_coherence_map(scene, array);
    benchmark::DoNotOptimize(map);
  }
}
BENCHMARK(BM_ForwardCoherenceMap)->Arg(10)->Arg(26);

void BM_ReconstructImage(benchmark::State& state) {
  const auto scene = make_test_pattern(51, 51, 0.7e-6);
  const double pitch = matched_detector_pitch(700e-9, 8.67, 51 * 0.7e-6);
  const DetectorArray array{static_cast<int>(state.range(0)), pitch, 8.67, 700e-9};
  const auto map = forward_coherence_map(scene, array);
  for (auto _ : state) {
    auto rec = reconstruct_image(map, array, {51, 0.7e-6});
    benchmark::DoNotOptimize(rec);
  }
}
BENCHMARK(BM_ReconstructImage)->Arg(10)->Arg(26);

}  // namespace

BENCHMARK_MAIN();
