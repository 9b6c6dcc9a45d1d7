#include <gtest/gtest.h>

#include <cmath>

#include "coxam/ai_model.hpp"
#include "coxam/json_io.hpp"
#include "coxam/surrogates.hpp"
#include "coxam/task.hpp"
#include "coxam/trial_pool.hpp"
#include "test_support.hpp"

namespace coxam {
namespace {

using testing::unit_specs;

/// Rows uniform over [0, 10]^6 labelled by `rule`.
template <typename Rule>
Dataset labelled(std::size_t n, Rule rule, std::uint64_t seed = 1) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<Instance> rows(n);
  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : rows[i]) v = u(rng);
    labels[i] = rule(rows[i]);
  }
  return Dataset(unit_specs(), rows, labels, seed);
}

TEST(AiModel, SeparableDataIsLearnedExactly) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<Instance> rows;
  std::vector<Label> labels;
  for (int i = 0; i < 400; ++i) {
    Instance x;
    for (auto& v : x) v = u(rng);
    x[0] = i % 2 == 0 ? -1.0 : 1.0;
    rows.push_back(x);
    labels.push_back(label_from_sign(x[0]));
  }
  AttributeSpecs specs = unit_specs();
  specs[0].min = -1.0;
  specs[0].max = 1.0;
  const Dataset d(specs, rows, labels, 1);
  const AiModel ai = train_ai(d, {});
  EXPECT_DOUBLE_EQ(ai.test_accuracy, 1.0);
  EXPECT_FALSE(ai.non_converged);
}

TEST(AiModel, TrainingIsBitIdenticalForASeed) {
  const Dataset d = make_synthetic_dataset(SyntheticKind::kWineLike, 400, 2);
  const AiModel a = train_ai(d, {});
  const AiModel b = train_ai(d, {});
  EXPECT_EQ(a.hidden_weights_, b.hidden_weights_);
  EXPECT_EQ(a.output_weights_, b.output_weights_);
  EXPECT_EQ(to_json(a), to_json(b));
}

TEST(AiModel, ProbabilityStaysInsideTheOpenInterval) {
  const Dataset d = make_synthetic_dataset(SyntheticKind::kWineLike, 400, 2);
  const AiModel ai = train_ai(d, {});
  Instance extreme;
  extreme.fill(1e9);
  const double p = ai.probability(extreme);
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1.0);
}

TEST(AiModel, JsonRoundTripPreservesPredictions) {
  const Dataset d = make_synthetic_dataset(SyntheticKind::kMushroomLike, 400, 2);
  const AiModel ai = train_ai(d, {});
  const AiModel back = ai_model_from_json(to_json(ai));
  for (const auto& row : d.rows()) EXPECT_DOUBLE_EQ(back.probability(row), ai.probability(row));
}

TEST(Tree, SingleThresholdRuleIsFoundAtTheRoot) {
  const auto rule = [](const Instance& x) { return label_from_sign(x[1] - 5.0); };
  const Dataset d = labelled(800, rule);
  const RuleTree tree = fit_tree(d.rows(), d.targets(), 2);
  EXPECT_EQ(tree.root().attribute, 1u);
  EXPECT_NEAR(tree.root().threshold, 5.0, 0.1);
  EXPECT_DOUBLE_EQ(fidelity([&](const Instance& x) { return tree.predict(x); }, rule, d.rows()), 1.0);
}

TEST(Tree, ConstantLabelsGiveASingleLeaf) {
  const Dataset d = labelled(200, [](const Instance&) { return Label::Negative; });
  const RuleTree tree = fit_tree(d.rows(), d.targets(), 3);
  EXPECT_TRUE(tree.root().leaf);
  EXPECT_EQ(tree.leaf_count(), 1u);
  EXPECT_EQ(tree.root().label, Label::Negative);
}

TEST(Tree, PathsRespectDepthAndBranchRule) {
  const Dataset d = labelled(800, [](const Instance& x) { return label_from_sign(x[0] + x[2] - 10.0); });
  const RuleTree tree = fit_tree(d.rows(), d.targets(), 3);
  tree.validate();
  for (const auto& x : d.rows()) {
    const auto path = tree.path(x);
    EXPECT_LE(path.size(), 4u);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      const auto& n = tree.node(path[i]);
      EXPECT_EQ(path[i + 1], x[n.attribute] < n.threshold ? n.left : n.right);
    }
  }
}

TEST(Tree, MissingChildIsAStructuralError) {
  RuleTree tree;
  RuleTree::Node root;
  root.leaf = false;
  root.left = 1;
  root.right = 2;
  RuleTree::Node leaf;
  leaf.id = 1;
  tree.nodes = {root, leaf};
  try {
    tree.validate();
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStructure);
  }
}

TEST(Tree, DisplayedThresholdsHaveThreeFigures) {
  const Dataset d = labelled(500, [](const Instance& x) { return label_from_sign(x[3] - 3.14159); });
  const RuleTree shown = fit_tree(d.rows(), d.targets(), 2).displayed();
  for (const auto& n : shown.nodes) {
    if (!n.leaf) {
      EXPECT_DOUBLE_EQ(n.threshold, round_sig(n.threshold));
    }
  }
}

TEST(Linear, FitRecoversDirectionOfALinearOracle) {
  const Dataset d = labelled(1500, [](const Instance& x) { return label_from_sign(2.0 * x[0] - x[1] - 5.0); });
  std::array<bool, kNumAttributes> mask;
  mask.fill(true);
  const WeightModel w = fit_logistic(d.rows(), d.targets(), mask);
  EXPECT_GT(w.factors[0], 0.0);
  EXPECT_LT(w.factors[1], 0.0);
  EXPECT_NEAR(w.factors[0] / w.factors[1], -2.0, 0.2);
}

TEST(Linear, LowComplexityKeepsThreeFactors) {
  const auto low = testing::shared_task("wine", Complexity::kLow);
  EXPECT_EQ(low->weights_full.nonzero_count(), 3u);
  EXPECT_EQ(nonzero_factors_for(Complexity::kLow), 3);
  EXPECT_EQ(nonzero_factors_for(Complexity::kHigh), 6);
  EXPECT_EQ(tree_depth_for(Complexity::kHigh), 3);
  EXPECT_EQ(tree_depth_for(Complexity::kLow), 2);
}

TEST(Linear, ConstantLabelsGiveZeroFactors) {
  const Dataset d = labelled(300, [](const Instance&) { return Label::Positive; });
  std::array<bool, kNumAttributes> mask;
  mask.fill(true);
  const WeightModel w = fit_logistic(d.rows(), d.targets(), mask);
  for (double f : w.factors) EXPECT_NEAR(f, 0.0, 1e-6);
  EXPECT_GT(w.intercept, 0.0);
}

TEST(Linear, DisplayedModelIsRounded) {
  WeightModel w;
  w.intercept = 1.23456;
  w.factors = {0.012345, -98.765, 0.0, 1.0, 2.0, 3.0};
  const WeightModel s = w.displayed();
  EXPECT_DOUBLE_EQ(s.intercept, 1.23);
  EXPECT_DOUBLE_EQ(s.factors[0], 0.0123);
  EXPECT_DOUBLE_EQ(s.factors[1], -98.8);
}

TEST(TrialPool, FortyTrialsAreBalancedWithThirtySixAgreeing) {
  const auto task = testing::shared_task();
  const TrialPool pool = select_task_instances(*task, XaiCondition::kRules, 40, 5);
  ASSERT_EQ(pool.size(), 40u);
  int pos = 0, agree = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    pos += pool.ai_labels[i] == Label::Positive ? 1 : 0;
    agree += pool.surrogate_labels[i] == pool.ai_labels[i] ? 1 : 0;
    EXPECT_EQ(task->models.ai.predict(pool.instances[i]), pool.ai_labels[i]);
    EXPECT_EQ(task->models.tree->predict(pool.instances[i]), pool.surrogate_labels[i]);
  }
  EXPECT_EQ(pos, 20);
  EXPECT_EQ(agree, 36);
  EXPECT_DOUBLE_EQ(pool.fidelity, 0.9);
  EXPECT_DOUBLE_EQ(pool.balance, 0.5);
}

TEST(TrialPool, NonIntegralQuotaIsInfeasible) {
  const auto task = testing::shared_task();
  const auto rows = task->dataset->test_rows();
  try {
    select_trial_instances(task->ai_classifier(), {task->tree_classifier()}, rows, 2, 1);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
  }
}

TEST(TrialPool, PerfectSurrogateCannotMeetTheDisagreementQuota) {
  const auto task = testing::shared_task();
  const auto rows = task->dataset->test_rows();
  try {
    select_trial_instances(task->ai_classifier(), {task->ai_classifier()}, rows, 40, 1);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
    EXPECT_NE(std::string(e.what()).find("disagree"), std::string::npos);
  }
}

TEST(Task, JsonRoundTripKeepsModels) {
  const auto task = testing::shared_task();
  const Task back = task_from_json(task_to_json(*task));
  EXPECT_EQ(task_to_json(back), task_to_json(*task));
  EXPECT_FALSE(back.dataset.has_value());
  for (const auto& row : task->dataset->test_rows()) {
    EXPECT_EQ(back.models.ai.predict(row), task->models.ai.predict(row));
    EXPECT_EQ(back.models.tree->predict(row), task->models.tree->predict(row));
    EXPECT_EQ(back.models.weights->predict(row), task->models.weights->predict(row));
  }
}

TEST(Task, ShownExplanationsAreAtDisplayPrecision) {
  const auto task = testing::shared_task();
  for (double f : task->models.weights->factors) EXPECT_DOUBLE_EQ(f, round_sig(f));
  for (const auto& n : task->models.tree->nodes) {
    if (!n.leaf) {
      EXPECT_DOUBLE_EQ(n.threshold, round_sig(n.threshold));
    }
  }
}

}  // namespace
}  // namespace coxam
