#include <benchmark/benchmark.h>

#include "swarmloc/assignment_bp.hpp"
#include "swarmloc/positioning.hpp"
#include "swarmloc/tip.hpp"

namespace {

using namespace swarmloc;

MeasurementSet scenario(std::size_t n, double bandwidth_hz) {
  RandomSwarmParams params;
  params.n = n;
  OtfsGrid grid;
  grid.bandwidth_hz = bandwidth_hz;
  return build_measurements(sample_random_swarm(params, 42), grid);
}

void BM_BpMarginals(benchmark::State& state) {
  const auto m = scenario(static_cast<std::size_t>(state.range(0)), 3e6);
  for (auto _ : state) benchmark::DoNotOptimize(compute_marginals(m.lists, m.grid, BpConfig{}));
}
BENCHMARK(BM_BpMarginals)->Arg(5)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_Gradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RandomSwarmParams params;
  params.n = n;
  const SwarmState s = sample_random_swarm(params, 7);
  const auto m = build_measurements(s, OtfsGrid{});
  const auto obs = apply_maps(m.lists, m.truth_maps).distance;
  const Stacked t = stack(sample_random_swarm(params, 8).positions());
  for (auto _ : state) benchmark::DoNotOptimize(gradient(t, obs));
}
BENCHMARK(BM_Gradient)->Arg(8)->Arg(16)->Arg(32);

void BM_ColdStart(benchmark::State& state) {
  RandomSwarmParams params;
  params.n = 8;
  const SwarmState s = sample_random_swarm(params, 9);
  OtfsGrid grid;
  grid.bandwidth_hz = 30e6;
  const auto m = build_measurements(s, grid);
  TipConfig cfg;
  cfg.turbo_iterations = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_cold_start(m, Anchors::from_swarm(s), cfg, 1));
}
BENCHMARK(BM_ColdStart)->Arg(0)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
