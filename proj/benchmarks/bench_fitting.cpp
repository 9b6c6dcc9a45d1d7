#include <benchmark/benchmark.h>

#include <cmath>

#include "bench_support.hpp"
#include "coxam/fitting.hpp"

namespace coxam {
namespace {

const Session& logged_session() {
  static const Session s = [] {
    SessionConfig sc;
    sc.condition = XaiCondition::kHybrid;
    sc.seed = 9;
    MyopicController controller;
    return simulate_session("bench", sc, bench::task(), {}, controller, derive_seed(9, 1));
  }();
  return s;
}

/// One objective evaluation: the agent replayed through a logged session `replays` times.
void BM_ForwardObjective(benchmark::State& state) {
  const auto t = bench::task();
  const ParticipantObjective obj(t->models, XaiCondition::kHybrid, logged_session().records(), FitTarget::kForward,
                                 static_cast<int>(state.range(0)), 3);
  CognitiveParams p;
  for (auto _ : state) benchmark::DoNotOptimize(obj.evaluate(p));
}
BENCHMARK(BM_ForwardObjective)->Arg(1)->Arg(32)->Unit(benchmark::kMillisecond);

/// Gaussian-process optimizer overhead on a cheap objective, so the surrogate dominates.
void BM_MinimizeGp(benchmark::State& state) {
  const auto f = [](std::span<const double> x) {
    return std::sin(3.0 * x[0]) + (x[1] - 0.2) * (x[1] - 0.2) + 0.5 * x[2] * x[2];
  };
  const std::vector<std::pair<double, double>> bounds{{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}};
  OptimizerConfig cfg;
  cfg.budget = static_cast<int>(state.range(0));
  cfg.patience = cfg.budget;
  for (auto _ : state) benchmark::DoNotOptimize(minimize_gp(f, bounds, cfg));
}
BENCHMARK(BM_MinimizeGp)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace coxam
