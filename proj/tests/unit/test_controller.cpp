#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "coxam/controller.hpp"
#include "test_support.hpp"

namespace coxam {
namespace {

struct Scene {
  std::shared_ptr<const Task> task = testing::shared_task();
  MemoryStore memory;
  MentalFactors beliefs = MentalFactors::initial(task->models.weights);
  TrialContext ctx;
  EpisodeStats stats;

  Scene(SchemaKind shown, std::size_t row = 0) {
    ctx.task = &task->models;
    ctx.instance = task->dataset->test_rows().at(row);
    ctx.shown = shown;
    ctx.memory = &memory;
    ctx.beliefs = &beliefs;
  }

  DecisionPoint point(Phase phase, XaiCondition condition, double gamma = 0.02) {
    DecisionPoint p;
    p.ctx = &ctx;
    p.phase = phase;
    p.condition = condition;
    p.params.gamma = gamma;
    p.stats = &stats;
    p.mask = feasible_actions(ctx, phase, condition);
    return p;
  }
};

std::set<Strategy> strategies_in(const ActionMask& mask) {
  std::set<Strategy> out;
  for (const auto& a : action_catalog()) {
    if (mask[a.index]) out.insert(a.strategy);
  }
  return out;
}

TEST(Catalog, HasFortyTwoIndexedActions) {
  const auto& c = action_catalog();
  ASSERT_EQ(c.size(), 42u);
  std::array<int, kNumStrategies> per{};
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(c[i].index, i);
    ++per[static_cast<std::size_t>(c[i].strategy)];
  }
  EXPECT_EQ(per[static_cast<std::size_t>(Strategy::kApproximateCalculation)], 16);
  EXPECT_EQ(per[static_cast<std::size_t>(Strategy::kFeatureAttribution)], 16);
  EXPECT_EQ(per[static_cast<std::size_t>(Strategy::kAtaTraversal)], 4);
  EXPECT_EQ(per[static_cast<std::size_t>(Strategy::kInverseCalculation)], 1);
  EXPECT_EQ(per[static_cast<std::size_t>(Strategy::kInverseFeatureAttribution)], 1);
  EXPECT_EQ(per[static_cast<std::size_t>(Strategy::kNodeThresholdCrossing)], 3);
  EXPECT_EQ(per[static_cast<std::size_t>(Strategy::kAvailabilityHeuristic)], 1);
}

TEST(Catalog, StrategyNamesRoundTrip) {
  for (std::size_t i = 0; i < kNumStrategies; ++i) {
    const auto s = static_cast<Strategy>(i);
    EXPECT_EQ(parse_strategy(strategy_name(s)), s);
  }
  EXPECT_THROW(parse_strategy("telepathy"), Error);
}

TEST(Feasibility, ShownWeightsExposeWeightStrategiesOnly) {
  Scene s(SchemaKind::kWeights);
  const auto fwd = strategies_in(feasible_actions(s.ctx, Phase::kForward, XaiCondition::kHybrid));
  EXPECT_EQ(fwd, (std::set<Strategy>{Strategy::kApproximateCalculation, Strategy::kFeatureAttribution}));
  const auto cf = strategies_in(feasible_actions(s.ctx, Phase::kCounterfactual, XaiCondition::kHybrid));
  EXPECT_EQ(cf, (std::set<Strategy>{Strategy::kInverseCalculation, Strategy::kInverseFeatureAttribution,
                                    Strategy::kAvailabilityHeuristic}));
}

TEST(Feasibility, ShownRulesExposeTreeStrategies) {
  Scene s(SchemaKind::kRules);
  const auto fwd = strategies_in(feasible_actions(s.ctx, Phase::kForward, XaiCondition::kRules));
  EXPECT_EQ(fwd, (std::set<Strategy>{Strategy::kFeatureAttribution, Strategy::kAtaTraversal}));
  const auto cf = strategies_in(feasible_actions(s.ctx, Phase::kCounterfactual, XaiCondition::kRules));
  EXPECT_EQ(cf, (std::set<Strategy>{Strategy::kInverseFeatureAttribution, Strategy::kNodeThresholdCrossing,
                                    Strategy::kAvailabilityHeuristic}));
}

TEST(Feasibility, HiddenTrialsFollowTheCondition) {
  Scene s(SchemaKind::kNone);
  const auto rules = strategies_in(feasible_actions(s.ctx, Phase::kForward, XaiCondition::kRules));
  EXPECT_TRUE(rules.count(Strategy::kAtaTraversal));
  EXPECT_FALSE(rules.count(Strategy::kApproximateCalculation));
  const auto weights = strategies_in(feasible_actions(s.ctx, Phase::kForward, XaiCondition::kWeights));
  EXPECT_TRUE(weights.count(Strategy::kApproximateCalculation));
  EXPECT_FALSE(weights.count(Strategy::kAtaTraversal));
  // Inverse calculation always needs the weights on screen.
  const auto cf = strategies_in(feasible_actions(s.ctx, Phase::kCounterfactual, XaiCondition::kWeights));
  EXPECT_FALSE(cf.count(Strategy::kInverseCalculation));
}

TEST(Feasibility, DepthAndSubsetSizeRespectTheModels) {
  Scene s(SchemaKind::kRules);
  const auto mask = feasible_actions(s.ctx, Phase::kCounterfactual, XaiCondition::kRules);
  for (const auto& a : action_catalog()) {
    if (a.strategy == Strategy::kNodeThresholdCrossing) EXPECT_EQ(mask[a.index], a.depth < s.task->models.tree->depth);
  }
  Scene w(SchemaKind::kWeights);
  const int nonzero = static_cast<int>(w.task->models.weights->nonzero_count());
  const auto fmask = feasible_actions(w.ctx, Phase::kForward, XaiCondition::kWeights);
  for (const auto& a : action_catalog()) {
    if (a.strategy == Strategy::kApproximateCalculation) EXPECT_EQ(fmask[a.index], a.subset_size <= nonzero);
  }
}

TEST(Value, CostTradesAgainstUtility) {
  const ValueEstimate v = make_value(0.75, 11.1, 0.02);
  EXPECT_NEAR(v.value, 0.528, 1e-12);
  // The slower, more accurate option loses at this cost.
  EXPECT_LT(make_value(0.75, 11.1, 0.02).value, make_value(0.73, 9.1, 0.02).value);
  std::array<std::optional<ValueEstimate>, kNumActions> values{};
  values[3] = make_value(0.75, 11.1, 0.02);
  values[7] = make_value(0.73, 9.1, 0.02);
  EXPECT_EQ(argmax_value(values), 7u);
}

TEST(Value, TiesGoToTheFasterThenEarlierAction) {
  std::array<std::optional<ValueEstimate>, kNumActions> values{};
  values[5] = ValueEstimate{0.5, 3.0, 0.4};
  values[2] = ValueEstimate{0.6, 4.0, 0.4};
  EXPECT_EQ(argmax_value(values), 5u);
  values[9] = ValueEstimate{0.5, 3.0, 0.4};
  EXPECT_EQ(argmax_value(values), 5u);
  EXPECT_THROW(argmax_value({}), Error);
}

TEST(Utility, ForwardExamples) {
  EXPECT_DOUBLE_EQ(forward_utility(0.8, Label::Positive), 0.8);
  EXPECT_NEAR(forward_utility(0.8, Label::Negative), 0.2, 1e-15);
  EXPECT_DOUBLE_EQ(planning_forward_utility(0.3), 0.7);
  EXPECT_DOUBLE_EQ(planning_agreement(0.8, 1.0), 0.8);
  EXPECT_NEAR(planning_agreement(0.8, 0.0), 0.2, 1e-15);
  EXPECT_DOUBLE_EQ(planning_agreement(0.8, 0.5), 0.5);
}

TEST(Utility, CounterfactualIsTheFlippedMass) {
  const auto specs = testing::unit_specs();
  const Instance x{5.0, 5.0, 5.0, 5.0, 5.0, 5.0};
  EditDistribution d;
  d.edits = {{make_edit(specs, x, 0, 3.0), 0.25}, {make_edit(specs, x, 0, -3.0), 0.75}};
  const Classifier model = [](const Instance& v) { return label_from_sign(v[0] - 6.0); };
  EXPECT_DOUBLE_EQ(counterfactual_utility(d, x, model, Label::Negative), 0.25);
}

TEST(Myopic, ChoosesTheHighestForecastValue) {
  Scene s(SchemaKind::kWeights);
  const auto point = s.point(Phase::kForward, XaiCondition::kWeights);
  const auto values = plan_values(point);
  MyopicController c;
  Rng rng(1);
  const std::size_t chosen = c.select(point, rng);
  ASSERT_TRUE(values[chosen].has_value());
  EXPECT_TRUE(point.mask[chosen]);
  for (std::size_t i = 0; i < kNumActions; ++i) {
    EXPECT_EQ(values[i].has_value(), point.mask[i]);
    if (values[i]) EXPECT_LE(values[i]->value, values[chosen]->value);
  }
}

TEST(Myopic, ExtremeCostPicksTheFastestAction) {
  for (auto phase : {Phase::kForward, Phase::kCounterfactual}) {
    Scene s(SchemaKind::kRules, 2);
    const auto point = s.point(phase, XaiCondition::kRules, 1e9);
    const auto values = plan_values(point);
    MyopicController c;
    Rng rng(1);
    const std::size_t chosen = c.select(point, rng);
    for (const auto& v : values) {
      if (v) EXPECT_GE(v->expected_time, values[chosen]->expected_time);
    }
  }
}

TEST(Myopic, PlanningHasNoMemorySideEffects) {
  Scene s(SchemaKind::kRules);
  const auto before = s.memory.size();
  const double clock = s.memory.clock();
  plan_values(s.point(Phase::kForward, XaiCondition::kRules));
  EXPECT_EQ(s.memory.size(), before);
  EXPECT_EQ(s.memory.clock(), clock);
}

TEST(Restricted, OnlyAllowedStrategiesAreChosen) {
  Scene s(SchemaKind::kRules);
  MyopicController inner;
  RestrictedController c(inner, {Strategy::kAvailabilityHeuristic});
  Rng rng(1);
  const std::size_t chosen = c.select(s.point(Phase::kCounterfactual, XaiCondition::kRules), rng);
  EXPECT_EQ(action_catalog()[chosen].strategy, Strategy::kAvailabilityHeuristic);
}

TEST(Restricted, InfeasibleRestrictionFallsBackToTheFullMask) {
  Scene s(SchemaKind::kRules);
  MyopicController inner;
  RestrictedController c(inner, {Strategy::kInverseCalculation});
  Rng rng(1);
  const auto point = s.point(Phase::kCounterfactual, XaiCondition::kRules);
  EXPECT_TRUE(point.mask[c.select(point, rng)]);
  EXPECT_THROW(RestrictedController(inner, {}), Error);
}

TEST(State, FeatureVectorHasFixedSizeAndIsFinite) {
  Scene s(SchemaKind::kNone);
  const StateVector v = state_features(s.point(Phase::kForward, XaiCondition::kHybrid));
  EXPECT_EQ(v.size(), 37u);
  for (double f : v) EXPECT_TRUE(std::isfinite(f));
}

TEST(RankedSubset, ShownWeightsRankByMagnitude) {
  Scene s(SchemaKind::kWeights);
  const auto& w = s.task->models.weights->factors;
  const auto top = ranked_subset(s.ctx, 3);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_GE(std::abs(w[top[0]]), std::abs(w[top[1]]));
  EXPECT_GE(std::abs(w[top[1]]), std::abs(w[top[2]]));
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    if (std::find(top.begin(), top.end(), i) == top.end()) EXPECT_LE(std::abs(w[i]), std::abs(w[top[2]]));
  }
}

}  // namespace
}  // namespace coxam
