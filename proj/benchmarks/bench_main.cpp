#include <benchmark/benchmark.h>

#include <cstddef>
#include <vector>

#include "storesched/engine.hpp"
#include "storesched/policies.hpp"
#include "storesched/sizing.hpp"
#include "storesched/traces.hpp"

namespace {

using namespace storesched;

std::vector<double> year_trace(double overcapacity) {
  SynthParams params;
  params.seed = 3;
  const DemandGeneration dg = synthesize(params);
  return scale_to_overcapacity(dg.demand_mw, dg.generation_mw(), overcapacity).values_mw;
}

Fleet three_store_fleet() {
  return {StoreSpec{"long", 20e6, 80e3, 50e3, 0.4}, StoreSpec{"medium", 1.5e6, 15e3, 15e3, 0.7},
          StoreSpec{"short", 0.05e6, 5e3, 5e3, 0.9}};
}

void BM_ScheduleValueLp(benchmark::State& state) {
  Fleet fleet;
  std::vector<double> levels;
  ValueParams params;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    fleet.push_back(StoreSpec{"s" + std::to_string(i), 100.0 + 10.0 * i, 10.0, 8.0, 0.4 + 0.05 * i});
    levels.push_back(30.0 + 5.0 * i);
    params.lambdas_per_hour.push_back(0.001 * (i + 1));
  }
  const FleetState s{levels, 0};
  double re = -12.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(schedule_value_lp(s, re, fleet, params));
    re = -re;
  }
}
BENCHMARK(BM_ScheduleValueLp)->Arg(1)->Arg(3)->Arg(8);

void BM_SimulateYear(benchmark::State& state, PolicyKind policy) {
  const auto re = year_trace(0.3);
  const Fleet fleet = three_store_fleet();
  const FleetState s0 = full_state(fleet);
  const SimOptions options{false};
  for (auto _ : state) benchmark::DoNotOptimize(simulate(fleet, s0, re, policy, options).total_unserved_mwh);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(re.size()));
}
BENCHMARK_CAPTURE(BM_SimulateYear, value_lp, PolicyKind{ValueParams{{0.0011, 0.01, 0.05}}})
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_SimulateYear, grtef, PolicyKind{Grtef{}})->Unit(benchmark::kMillisecond);

void BM_MinSingleStoreCapacity(benchmark::State& state) {
  const auto re = year_trace(0.3);
  for (auto _ : state) benchmark::DoNotOptimize(min_single_store_capacity(re, 0.4, 1.0).capacity_mwh);
}
BENCHMARK(BM_MinSingleStoreCapacity)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
