// Microbenchmarks for the hot paths: the explicit PDE march, the backward
// lattice recursions, the path-space transforms, and raw path generation.
// Not registered with ctest; run the sublin_bench binary directly.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <benchmark/benchmark.h>

#include "sublin/band.hpp"
#include "sublin/grid.hpp"
#include "sublin/increments.hpp"
#include "sublin/lattice.hpp"
#include "sublin/partition.hpp"
#include "sublin/pathspace.hpp"
#include "sublin/pde.hpp"
#include "sublin/rng.hpp"
#include "sublin/test_functions.hpp"

using namespace sublin;

namespace {

VolatilityBand bench_band() { return VolatilityBand::make(0.25, 1.0); }

// A deterministic zig-zag input for the transform benchmarks.
std::vector<double> walk_values(int n) {
  std::mt19937_64 engine(12345);
  std::vector<double> x(n + 1, 0.0);
  const double step = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) {
    x[i + 1] = x[i] + ((engine() >> 63) ? step : -step);
  }
  return x;
}

SamplePath walk_path(int n) {
  SamplePath path;
  path.partition = TimePartition::uniform(1.0, n);
  path.values = walk_values(n);
  path.policy_trace.assign(n, 1.0);
  return path;
}

void BM_PdeSolve(benchmark::State& state) {
  const double dx = 1.0 / static_cast<double>(state.range(0));
  const auto grid = SpatialGrid::make(-8.0, 8.0, dx);
  const auto h = Nonlinearity::from(SublinearGenerator(bench_band()));
  const auto phi = TestFunction::clamped_abs(10.0);
  PdeConfig pc;
  pc.horizon = 1.0;
  for (auto _ : state) {
    const GridFunction u = solve(h, phi, pc, grid);
    benchmark::DoNotOptimize(u.values.front());
  }
}
BENCHMARK(BM_PdeSolve)->Arg(25)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_LatticeExpectation(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto partition = TimePartition::uniform(1.0, n);
  const auto sigmas = SigmaSet::refined(bench_band(), 5);
  const auto scheme = IncrementScheme::rademacher();
  const auto phi = TestFunction::clamped_abs(10.0);
  for (auto _ : state) {
    const double v = lattice_expectation([&phi](double b) { return phi(b); }, partition,
                                         sigmas, scheme);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_LatticeExpectation)->Arg(256)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_DpReflectedGap(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto partition = TimePartition::uniform(1.0, n);
  const auto sigmas = SigmaSet::refined(bench_band(), 5);
  const auto scheme = IncrementScheme::rademacher();
  const auto phi = TestFunction::clamped_abs(10.0);
  for (auto _ : state) {
    const double v = dp_expectation(StateSpec::reflected_gap(),
                                    [&phi](std::span<const double> s) { return phi(s[0]); },
                                    partition, sigmas, scheme)
                         .value;
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_DpReflectedGap)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_SkorokhodMap(benchmark::State& state) {
  const auto x = walk_values(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    const auto dec = skorokhod_map(x);
    benchmark::DoNotOptimize(dec.z.back());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SkorokhodMap)->Arg(1 << 10)->Arg(1 << 14)->Arg(1 << 17)->Unit(benchmark::kMicrosecond);

void BM_DiscreteLocalTime(benchmark::State& state) {
  const auto path = walk_path(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    const auto lt = discrete_local_time(path, 0.0);
    benchmark::DoNotOptimize(lt.L.back());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DiscreteLocalTime)->Arg(1 << 10)->Arg(1 << 14)->Unit(benchmark::kMicrosecond);

void BM_McThroughput(benchmark::State& state) {
  const int n = 256;
  const auto partition = TimePartition::uniform(1.0, n);
  const auto scheme = IncrementScheme::rademacher();
  const StepPolicy policy = [](int, double b) { return b <= 0.0 ? 1.0 : 0.5; };
  SamplePath path;
  uint64_t id = 0;
  for (auto _ : state) {
    PathRng rng(stream_key(424242, id++));
    simulate_into(path, policy, partition, scheme, rng, 0.5, 1.0);
    benchmark::DoNotOptimize(path.values.back());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_McThroughput)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
