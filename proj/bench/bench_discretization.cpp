#include "ctop/discretization.hpp"
#include "ctop/ocp.hpp"
#include "ctop/scenario.hpp"

#include <benchmark/benchmark.h>

namespace {

ctop::Trajectory survey_reference(int nodes) {
  ctop::Scenario sc;
  sc.x_start.segment<3>(ctop::sx::pos) = ctop::Vec3(0, 0, 10);
  sc.x_goal.segment<3>(ctop::sx::pos) = ctop::Vec3(500, 500, 100);
  sc.nodes = nodes;
  return ctop::initial_guess(sc);
}

void BM_DiscretizeSerial(benchmark::State& state) {
  const ctop::QuadrotorParams params;
  const ctop::Trajectory ref = survey_reference(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto sys = ctop::discretize_trajectory(ref, params, ctop::ExecPolicy::serial);
    benchmark::DoNotOptimize(sys.segments.data());
  }
  state.SetItemsProcessed(state.iterations() * (ref.node_count() - 1));
}

void BM_DiscretizeParallel(benchmark::State& state) {
  const ctop::QuadrotorParams params;
  const ctop::Trajectory ref = survey_reference(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto sys = ctop::discretize_trajectory(ref, params, ctop::ExecPolicy::parallel);
    benchmark::DoNotOptimize(sys.segments.data());
  }
  state.SetItemsProcessed(state.iterations() * (ref.node_count() - 1));
}

void BM_DefectsSerial(benchmark::State& state) {
  const ctop::QuadrotorParams params;
  const ctop::Trajectory ref = survey_reference(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto d = ctop::dynamics_defects(ref, params, ctop::ExecPolicy::serial);
    benchmark::DoNotOptimize(d.data());
  }
}

void BM_DefectsParallel(benchmark::State& state) {
  const ctop::QuadrotorParams params;
  const ctop::Trajectory ref = survey_reference(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto d = ctop::dynamics_defects(ref, params, ctop::ExecPolicy::parallel);
    benchmark::DoNotOptimize(d.data());
  }
}

}  // namespace

BENCHMARK(BM_DiscretizeSerial)->Arg(25)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DiscretizeParallel)->Arg(25)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DefectsSerial)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DefectsParallel)->Arg(100)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
