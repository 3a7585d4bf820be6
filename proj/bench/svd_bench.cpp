// Parallel round-robin Jacobi against the serial cyclic reference.
#include <benchmark/benchmark.h>

#include <random>

#include "lowrank/svd.hpp"

namespace {

lowrank::Matrix random_matrix(std::size_t m, std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 255.0);
  std::vector<double> d(m * n);
  for (double& x : d) x = dist(rng);
  return lowrank::Matrix(m, n, std::move(d));
}

void BM_SvdParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n + n / 4, n, 7);
  for (auto _ : state) benchmark::DoNotOptimize(lowrank::svd(a));
  state.SetComplexityN(state.range(0));
}

void BM_SvdSerialReference(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n + n / 4, n, 7);
  for (auto _ : state) benchmark::DoNotOptimize(lowrank::svd_reference(a));
  state.SetComplexityN(state.range(0));
}

void BM_Reconstruct(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto f = lowrank::svd(random_matrix(n, n, 11));
  for (auto _ : state) benchmark::DoNotOptimize(lowrank::reconstruct(f));
}

void BM_ReconstructReference(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto f = lowrank::svd(random_matrix(n, n, 11));
  for (auto _ : state) benchmark::DoNotOptimize(lowrank::reconstruct_reference(f));
}

}  // namespace

BENCHMARK(BM_SvdParallel)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SvdSerialReference)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Reconstruct)->RangeMultiplier(2)->Range(64, 512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReconstructReference)->RangeMultiplier(2)->Range(64, 512)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
