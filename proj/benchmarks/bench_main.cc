#include <random>

#include <benchmark/benchmark.h>

#include "secmpc/cubic.h"
#include "secmpc/cycle.h"
#include "secmpc/scenario.h"
#include "secmpc/sim.h"
#include "secmpc/timing.h"
#include "secmpc/waypoints.h"

namespace secmpc {
namespace {

void BM_PieceCost(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  auto rand = [&] {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = u(rng);
    return v;
  };
  const Vector x0 = rand(), v0 = rand(), x1 = rand(), v1 = rand();
  for (auto _ : state) benchmark::DoNotOptimize(EvaluatePieceCost(x0, v0, x1, v1, 0.7).psi);
}
BENCHMARK(BM_PieceCost)->Arg(2)->Arg(7);

std::vector<Vector> Waypoints(const SequenceSpec& spec, int k) {
  std::vector<Vector> w;
  for (int i = 1; i <= k; ++i) w.push_back(spec.scene.at("wp" + std::to_string(i)).position);
  return w;
}

void BM_TimingCold(benchmark::State& state) {
  const SequenceSpec spec = LoadScenario("five_waypoints").spec;
  const auto wps = Waypoints(spec, static_cast<int>(state.range(0)));
  const Vector x0 = spec.layout.InitialConfig();
  const Vector v0 = Vector::Zero(x0.size());
  for (auto _ : state) benchmark::DoNotOptimize(SolveTiming(x0, v0, wps, spec.alpha).taus);
}
BENCHMARK(BM_TimingCold)->DenseRange(1, 5)->Unit(benchmark::kMicrosecond);

void BM_TimingWarm(benchmark::State& state) {
  const SequenceSpec spec = LoadScenario("five_waypoints").spec;
  const auto wps = Waypoints(spec, 5);
  const Vector x0 = spec.layout.InitialConfig();
  const Vector v0 = Vector::Zero(x0.size());
  const TimingSolution warm = SolveTiming(x0, v0, wps, spec.alpha);
  for (auto _ : state) benchmark::DoNotOptimize(SolveTiming(x0, v0, wps, spec.alpha, &warm).taus);
}
BENCHMARK(BM_TimingWarm)->Unit(benchmark::kMicrosecond);

void BM_Waypoints(benchmark::State& state, const char* name) {
  const SequenceSpec spec = LoadScenario(name).spec;
  SystemState s = SystemState::AtRest(spec.layout.InitialConfig());
  ReadObjectDofs(spec.layout, spec.scene, &s.x);
  for (auto _ : state) benchmark::DoNotOptimize(SolveWaypoints(spec, spec.scene, s, 0).objective);
}
BENCHMARK_CAPTURE(BM_Waypoints, pick_place, "pick_place")->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_Waypoints, push2d, "push2d")->Unit(benchmark::kMicrosecond);

// Full controller cycles along a noiseless push2d run.
void BM_Cycle(benchmark::State& state) {
  const Scenario sc = LoadScenario("push2d");
  SimOptions opt;
  opt.heading_noise = 0.0;
  opt.apply_events = false;
  Simulation sim(sc, opt);
  for (auto _ : state) {
    if (sim.finished()) {
      state.PauseTiming();
      sim = Simulation(sc, opt);
      state.ResumeTiming();
    }
    benchmark::DoNotOptimize(sim.Advance());
  }
}
BENCHMARK(BM_Cycle)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace secmpc

BENCHMARK_MAIN();
