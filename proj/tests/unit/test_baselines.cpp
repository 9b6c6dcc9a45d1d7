#include <gtest/gtest.h>

#include <cmath>

#include "coxam/baselines.hpp"
#include "test_support.hpp"

namespace coxam {
namespace {

std::vector<TrialRecord> forward_records(const Session& s) {
  std::vector<TrialRecord> out;
  for (const auto& r : s.records()) {
    if (r.phase == Phase::kForward) out.push_back(r);
  }
  return out;
}

const Session& sample_session() {
  static const Session s = testing::simulate(testing::shared_task(), XaiCondition::kHybrid, 12);
  return s;
}

TEST(Baselines, ParameterCounts) {
  EXPECT_EQ(kCoxamParams, 3);
  EXPECT_EQ(kProxyParams, 1);
  EXPECT_EQ(kKnnParams, 2);
  EXPECT_EQ(kRandomParams, 0);
}

TEST(Baselines, RandomForwardIsFortyLnTwo) {
  const BaselineFit r = score_random_forward(sample_session().records());
  EXPECT_NEAR(r.score.nll, 27.726, 1e-3);
  EXPECT_EQ(r.score.k, 0);
  EXPECT_EQ(r.score.n, 40);
  EXPECT_NEAR(r.score.bic, 2.0 * r.score.nll, 1e-12);
}

TEST(Baselines, RandomSelectionIsFortyLnSix) {
  const ModelScore r = score_random_selection(sample_session().records());
  EXPECT_NEAR(r.nll, 71.67, 0.01);
  EXPECT_EQ(r.k, 0);
  EXPECT_NEAR(r.bic, 143.34, 0.02);
}

TEST(Baselines, UnsafeNllToleratesCertainty) {
  const std::vector<double> p{1.0, 0.0};
  const std::vector<Label> right{Label::Positive, Label::Negative};
  EXPECT_EQ(nll_forward_unchecked(p, right), 0.0);
  const std::vector<Label> wrong{Label::Negative, Label::Negative};
  EXPECT_TRUE(std::isinf(nll_forward_unchecked(p, wrong)));
}

TEST(Baselines, ProxyFollowsTheDisplayedSurrogate) {
  const auto task = testing::shared_task();
  const auto records = forward_records(sample_session());
  const auto p = baseline_proxy(task->models, ProxyKind::kTree, records, 0.2);
  ASSERT_EQ(p.size(), records.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool pos = task->models.tree->predict(displayed(records[i].instance)) == Label::Positive;
    EXPECT_NEAR(p[i], pos ? 0.9 : 0.1, 1e-12);
  }
  EXPECT_THROW(baseline_proxy(task->models, ProxyKind::kTree, records, 1.5), Error);
  TaskModels no_tree = task->models;
  no_tree.tree.reset();
  EXPECT_THROW(baseline_proxy(no_tree, ProxyKind::kTree, records, 0.2), Error);
}

TEST(Baselines, ProxyFitChoosesAGridSmoothing) {
  const auto task = testing::shared_task();
  const BaselineFit f = fit_proxy(task->models, ProxyKind::kLinear, sample_session().records());
  EXPECT_GE(f.smoothing, 0.0);
  EXPECT_LE(f.smoothing, 1.0);
  EXPECT_NEAR(f.smoothing * 1000.0, std::round(f.smoothing * 1000.0), 1e-9);
  EXPECT_EQ(f.score.k, 1);
  EXPECT_LE(f.score.nll, 27.726 + 1e-9);
}

TEST(Baselines, KnnStartsAtChanceAndUsesOnlyReleasedFeedback) {
  const auto task = testing::shared_task();
  const auto records = forward_records(sample_session());
  const auto p = baseline_knn(task->models, records, 3, 0.1);
  ASSERT_EQ(p.size(), records.size());
  EXPECT_EQ(p[0], 0.5);
  const auto released = released_before(records);
  for (std::size_t t = 0; t < records.size(); ++t) {
    if (released[t].empty()) EXPECT_EQ(p[t], 0.5);
  }
  // Paired trials defer feedback, so the second trial still has nothing released.
  EXPECT_TRUE(released[1].empty());
  EXPECT_EQ(released[2].size(), 2u);
}

TEST(Baselines, KnnFitReportsTwoParameters) {
  const auto task = testing::shared_task();
  const BaselineFit f = fit_knn(task->models, sample_session().records(), 5);
  EXPECT_GE(f.k_neighbors, 1);
  EXPECT_LE(f.k_neighbors, 5);
  EXPECT_EQ(f.score.k, 2);
}

TEST(Baselines, ShapSelectionScoresTheChosenAttribute) {
  Instance uniform;
  uniform.fill(1.0 / 6.0);
  const ModelScore s = score_shap_selection(uniform, sample_session().records());
  EXPECT_NEAR(s.nll, score_random_selection(sample_session().records()).nll, 1e-9);
}

TEST(Baselines, ForwardBaselinesInReportOrder) {
  const auto task = testing::shared_task();
  const auto fits = forward_baselines(task->models, sample_session().records());
  ASSERT_EQ(fits.size(), 4u);
  EXPECT_EQ(fits[0].score.model, "Random");
  EXPECT_EQ(fits[3].score.k, 2);
}

TEST(Baselines, MissingLabelIsAPrecondition) {
  auto records = forward_records(sample_session());
  records[3].response_label.reset();
  EXPECT_THROW(forward_responses(records), Error);
}

}  // namespace
}  // namespace coxam
