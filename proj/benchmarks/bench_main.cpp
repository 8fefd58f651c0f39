#include <benchmark/benchmark.h>

#include "models.hpp"
#include "wkam/barrier.hpp"
#include "wkam/critical.hpp"
#include "wkam/minplus.hpp"

using namespace wkam;

namespace {

Lattice pendulum_lattice(int n, int t) {
  return build_lattice({n, t, default_velocity_cap(testing::pendulum()), 1});
}

void BM_BuildKernel(benchmark::State& state) {
  const auto lat = pendulum_lattice(static_cast<int>(state.range(0)), 16);
  for (auto _ : state) benchmark::DoNotOptimize(build_step_kernel(testing::pendulum(), lat, 0.0));
  state.SetItemsProcessed(state.iterations() * lat.node_count());
}
BENCHMARK(BM_BuildKernel)->Arg(64)->Arg(128)->Arg(256);

void BM_Relax(benchmark::State& state) {
  const auto lat = pendulum_lattice(static_cast<int>(state.range(0)), 16);
  const auto k = build_step_kernel(testing::pendulum(), lat, 0.0);
  CostVector u(static_cast<std::size_t>(lat.node_count()), 0.0);
  for (auto _ : state) {
    u = relax(k, u);
    benchmark::DoNotOptimize(u.data());
  }
  state.SetItemsProcessed(state.iterations() * k.graph().edge_count());
}
BENCHMARK(BM_Relax)->Arg(64)->Arg(256)->Arg(1024);

void BM_MinMeanCycle(benchmark::State& state) {
  const auto lat = pendulum_lattice(static_cast<int>(state.range(0)), 16);
  const auto k = build_step_kernel(testing::pendulum(), lat, 0.0);
  const auto method = state.range(1) == 0 ? CycleMethod::karp : CycleMethod::howard;
  for (auto _ : state) benchmark::DoNotOptimize(min_mean_cycle(k, method));
}
BENCHMARK(BM_MinMeanCycle)->Args({32, 0})->Args({32, 1})->Args({64, 0})->Args({64, 1})
    ->Unit(benchmark::kMillisecond);

void BM_DenseMultiply(benchmark::State& state) {
  const auto lat = pendulum_lattice(static_cast<int>(state.range(0)), 16);
  const auto k = build_step_kernel(testing::pendulum(), lat, 0.0);
  const auto p = period_map(k, 0);
  for (auto _ : state) benchmark::DoNotOptimize(multiply(p, p));
}
BENCHMARK(BM_DenseMultiply)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_BarrierTable(benchmark::State& state) {
  const auto lat = pendulum_lattice(static_cast<int>(state.range(0)), 16);
  const auto k0 = build_step_kernel(testing::pendulum(), lat, 0.0);
  const auto kc = k0.with_offset(critical_value(testing::pendulum(), k0).c_est);
  for (auto _ : state) {
    benchmark::DoNotOptimize(BarrierTable::compute(kc, BarrierOptions{}, {false, {0}, {}}));
  }
}
BENCHMARK(BM_BarrierTable)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
