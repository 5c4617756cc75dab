#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mergesim/wavelet.hpp"

namespace {

std::vector<double> random_signal(std::size_t n) {
  std::mt19937_64 rng(n);
  std::normal_distribution<double> gauss(0.0, 5.0);
  std::vector<double> x(n);
  for (double& v : x) v = gauss(rng);
  return x;
}

void BM_Dwt(benchmark::State& state) {
  const auto x = random_signal(static_cast<std::size_t>(state.range(0)));
  mergesim::WaveletPipelineConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mergesim::dwt(x, cfg));
  }
}
BENCHMARK(BM_Dwt)->Arg(256)->Arg(1024)->Arg(4096);

void BM_Denoise(benchmark::State& state) {
  const auto x = random_signal(static_cast<std::size_t>(state.range(0)));
  mergesim::WaveletPipelineConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mergesim::denoise(x, cfg));
  }
}
BENCHMARK(BM_Denoise)->Arg(256)->Arg(1024)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
