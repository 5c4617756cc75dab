#include <benchmark/benchmark.h>

#include "mergesim/sim.hpp"

namespace {

void BM_SimStep(benchmark::State& state) {
  mergesim::ScenarioConfig cfg;
  cfg.mainline_flow = static_cast<double>(state.range(0));
  cfg.ramp_flow = 400.0;
  cfg.duration = 1e9;  // never finishes inside the loop
  mergesim::Simulation sim(cfg);
  // Warm the road so steps carry a realistic vehicle count.
  for (int i = 0; i < 6000; ++i) sim.step();
  for (auto _ : state) {
    sim.step();
  }
}
BENCHMARK(BM_SimStep)->Arg(1000)->Arg(2000)->Arg(3000);

void BM_ShortScenario(benchmark::State& state) {
  mergesim::ScenarioConfig cfg;
  cfg.duration = 120.0;
  cfg.warmup = 30.0;
  for (auto _ : state) {
    cfg.seed++;
    benchmark::DoNotOptimize(mergesim::run_scenario(cfg));
  }
}
BENCHMARK(BM_ShortScenario);

}  // namespace
