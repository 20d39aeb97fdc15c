#include <random>

#include <benchmark/benchmark.h>

#include "dfs/ep_baseline.hpp"
#include "dfs/feasibility.hpp"
#include "dfs/superiorizer.hpp"
#include "dfs/target.hpp"
#include "dfs/tomo_sim.hpp"

namespace {

const dfs::GeneratedProblem& desk() {
  static const auto problem = [] {
    const dfs::PixelGrid grid{64, 64, 1.0};
    return dfs::generate(grid, dfs::FanGeometry::covering(grid, 120, 95), dfs::default_head_phantom(grid));
  }();
  return problem;
}

void BM_PhiProbe(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const dfs::MedianRoughnessTarget t(n, n);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(n * n);
  for (auto& v : x) v = u(rng);
  auto [phi, cache] = dfs::phi_full(t, x);
  std::size_t j = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dfs::phi_probe(t, cache, x, j, x[j] + 0.01));
    j = (j + 97) % x.size();
  }
}
BENCHMARK(BM_PhiProbe)->Arg(64)->Arg(485);

void BM_PhiFull(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const dfs::MedianRoughnessTarget t(n, n);
  std::vector<double> x(n * n, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(t.value(x));
}
BENCHMARK(BM_PhiFull)->Arg(64);

void BM_KaczmarzSweep(benchmark::State& state) {
  const auto& p = desk();
  dfs::FeasibilityConfig f;
  f.relaxation = 0.05;
  f.ordering = dfs::make_ordering(dfs::OrderingScheme::projection_bit_reversal, 120, 95);
  dfs::ImageVector x(64, 64);
  for (auto _ : state) {
    x = dfs::apply_PT(p.system, f, x);
    benchmark::DoNotOptimize(x.values().data());
  }
  state.counters["rows"] = static_cast<double>(p.system.row_count());
}
BENCHMARK(BM_KaczmarzSweep)->Unit(benchmark::kMillisecond);

void BM_GenerateSystem(benchmark::State& state) {
  const dfs::PixelGrid grid{64, 64, 1.0};
  const auto geo = dfs::FanGeometry::covering(grid, 120, 95);
  for (auto _ : state) benchmark::DoNotOptimize(dfs::generate(grid, geo, dfs::default_head_phantom(grid)));
}
BENCHMARK(BM_GenerateSystem)->Unit(benchmark::kMillisecond);

void BM_EpProbe(benchmark::State& state) {
  const auto& p = desk();
  const dfs::MedianRoughnessTarget t(64, 64);
  dfs::PenalizedObjective obj(t, p.system, 1.0);
  std::vector<double> x(64 * 64, 0.0);
  obj.psi_full(x);
  std::size_t j = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(obj.probe(x, j, 0.01));
    j = (j + 97) % x.size();
  }
}
BENCHMARK(BM_EpProbe);

}  // namespace

BENCHMARK_MAIN();
