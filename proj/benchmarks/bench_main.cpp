#include <random>

#include <benchmark/benchmark.h>

#include "stocheq/stocheq.hpp"

namespace {

using stocheq::Index;
using stocheq::Matrix;

Matrix gaussian(std::mt19937_64& rng, Index r, Index c) {
  std::normal_distribution<double> nd;
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = nd(rng);
  return m;
}

stocheq::StochasticLinearSystem random_system(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix a = gaussian(rng, n, n);
  a *= 0.9 / stocheq::spectral_radius(a);
  return stocheq::make_system(a, gaussian(rng, n, 1), gaussian(rng, 2, n),
                              gaussian(rng, n, 1), stocheq::Vector::Zero(1),
                              Matrix::Identity(2, 2));
}

void BM_RankAndKernel(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const Index n = state.range(0);
  const Matrix m = gaussian(rng, n, n / 2) * gaussian(rng, n / 2, n);
  for (auto _ : state) benchmark::DoNotOptimize(stocheq::rank_and_kernel(m));
}
BENCHMARK(BM_RankAndKernel)->Arg(8)->Arg(32)->Arg(128);

void BM_InvariantEigenspaces(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const Matrix a = gaussian(rng, state.range(0), state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(stocheq::real_invariant_eigenspaces(a));
}
BENCHMARK(BM_InvariantEigenspaces)->Arg(6)->Arg(24)->Arg(64);

void BM_CheckBisimulation(benchmark::State& state) {
  const auto s = random_system(state.range(0), 3);
  const auto rel = stocheq::LinearRelation::identity(s.n());
  for (auto _ : state)
    benchmark::DoNotOptimize(stocheq::check_bisimulation(s, s, rel));
}
BENCHMARK(BM_CheckBisimulation)->Arg(4)->Arg(16)->Arg(32);

void BM_CheckExternal(benchmark::State& state) {
  const auto s = random_system(state.range(0), 4);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        stocheq::check_external_equivalence(s, s, std::nullopt));
}
BENCHMARK(BM_CheckExternal)->Arg(4)->Arg(16)->Arg(32);

void BM_MinimalBisim(benchmark::State& state) {
  const auto s = random_system(state.range(0), 5);
  for (auto _ : state) benchmark::DoNotOptimize(stocheq::minimal_bisim(s));
}
BENCHMARK(BM_MinimalBisim)->Arg(4)->Arg(12);

void BM_Simulate(benchmark::State& state) {
  const auto s = random_system(4, 6);
  stocheq::SimulationConfig cfg;
  cfg.trajectories = state.range(0);
  cfg.horizon = 10;
  const auto u = stocheq::InputSequence::zeros(1, 10);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        stocheq::simulate(s, stocheq::Vector::Zero(4), u, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 10);
}
BENCHMARK(BM_Simulate)->Arg(1000)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
