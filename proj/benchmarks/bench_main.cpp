#include <benchmark/benchmark.h>

#include "cardpen/problem.hpp"
#include "cardpen/quality.hpp"
#include "cardpen/sdp.hpp"

using namespace cardpen;

namespace {

Instance bench_instance(Index n, Index m) {
  const auto sigma = random_instance(n, m, 42, InstanceKind::DensePsd);
  return preprocess(sigma, 0.05 * sigma.diag().maxCoeff());
}

void BM_SolveRelaxation(benchmark::State& state) {
  const auto inst = bench_instance(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(solve_relaxation(inst));
  state.counters["n"] = static_cast<double>(inst.n());
  state.counters["m"] = static_cast<double>(inst.m());
}
BENCHMARK(BM_SolveRelaxation)
    ->Args({4, 4})
    ->Args({8, 4})
    ->Args({8, 8})
    ->Args({16, 8})
    ->Args({24, 12})
    ->Unit(benchmark::kMillisecond);

void BM_BruteForce(benchmark::State& state) {
  const auto inst = bench_instance(state.range(0), state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(brute_force(inst));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BruteForce)->DenseRange(6, 14, 2)->Unit(benchmark::kMillisecond);

void BM_RandomizedRound(benchmark::State& state) {
  const auto inst = bench_instance(8, 6);
  const auto relax = solve_relaxation(inst);
  for (auto _ : state) benchmark::DoNotOptimize(randomized_round(relax, inst, static_cast<int>(state.range(0)), 1));
}
BENCHMARK(BM_RandomizedRound)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_ThetaQuadrature(benchmark::State& state) {
  const Index m = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(theta_quadrature(m, 1.3));
}
BENCHMARK(BM_ThetaQuadrature)->Arg(2)->Arg(10)->Arg(100);

void BM_ThetaMonteCarlo(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(theta_monte_carlo(10, 1.0, state.range(0), 3));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ThetaMonteCarlo)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
