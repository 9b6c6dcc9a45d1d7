#include <benchmark/benchmark.h>

#include "bench_support.hpp"
#include "coxam/agent.hpp"
#include "coxam/ddm.hpp"
#include "coxam/memory.hpp"
#include "coxam/session.hpp"
#include "coxam/shap.hpp"

namespace coxam {
namespace {

void BM_DdmChoice(benchmark::State& state) {
  const DdmParams p{2.0, 1.3};
  double e = -1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ddm_choice(e, p));
    e = e > 1.0 ? -1.0 : e + 1e-3;
  }
}
BENCHMARK(BM_DdmChoice);

/// Retrieval cost grows with the number of candidate chunks of the cued type.
void BM_Retrieve(benchmark::State& state) {
  MemoryStore store;
  const auto n = state.range(0);
  for (int i = 0; i < n; ++i) {
    store.encode(ChunkType::kFactor, factor_chunk("a" + std::to_string(i), 0.1 * i), 0.5 * i);
  }
  store.set_clock(0.5 * static_cast<double>(n) + 10.0);
  const Cue cue{{ChunkType::kFactor}, {{slot::kAttribute, std::string("a3")}}};
  const RetrievalParams params{-1.0, 0.3};
  Rng rng(1);
  for (auto _ : state) {
    // A successful retrieval adds a use, so each iteration starts from the same store.
    state.PauseTiming();
    MemoryStore copy = store;
    state.ResumeTiming();
    benchmark::DoNotOptimize(retrieve(copy, cue, params, rng));
  }
}
BENCHMARK(BM_Retrieve)->Arg(8)->Arg(64)->Arg(512);

void BM_ForwardTrial(benchmark::State& state) {
  const auto t = bench::task();
  const auto condition = static_cast<XaiCondition>(state.range(0));
  MyopicController controller;
  Agent agent(t->models, condition, {}, controller, 5);
  agent.study();
  const auto rows = t->dataset->test_rows();
  const SchemaKind shown = condition == XaiCondition::kRules ? SchemaKind::kRules : SchemaKind::kWeights;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(agent.forward_trial(rows[i % rows.size()], shown, static_cast<int>(i % 40)));
    ++i;
  }
}
BENCHMARK(BM_ForwardTrial)
    ->Arg(static_cast<int>(XaiCondition::kWeights))
    ->Arg(static_cast<int>(XaiCondition::kRules));

/// A full 40 + 40 simulated session, including instance selection.
void BM_SimulateSession(benchmark::State& state) {
  const auto t = bench::task();
  SessionConfig sc;
  sc.condition = XaiCondition::kHybrid;
  MyopicController controller;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    sc.seed = seed;
    benchmark::DoNotOptimize(simulate_session("bench", sc, t, {}, controller, derive_seed(seed, 1)));
    ++seed;
  }
}
BENCHMARK(BM_SimulateSession)->Unit(benchmark::kMillisecond);

void BM_ExactShapley(benchmark::State& state) {
  const auto t = bench::task();
  const auto& rows = t->dataset->rows();
  const std::vector<Instance> background(rows.begin(), rows.begin() + state.range(0));
  const ScalarModel f = [&](const Instance& x) { return t->models.ai.probability(x); };
  for (auto _ : state) benchmark::DoNotOptimize(exact_shapley(f, rows[500], background));
}
BENCHMARK(BM_ExactShapley)->Arg(50)->Arg(100);

void BM_SampledShapley(benchmark::State& state) {
  const auto t = bench::task();
  const auto& rows = t->dataset->rows();
  const std::vector<Instance> background(rows.begin(), rows.begin() + 100);
  const ScalarModel f = [&](const Instance& x) { return t->models.ai.probability(x); };
  Rng rng(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sampled_shapley(f, rows[500], background, static_cast<int>(state.range(0)), rng));
  }
}
BENCHMARK(BM_SampledShapley)->Arg(200)->Arg(2000);

}  // namespace
}  // namespace coxam
