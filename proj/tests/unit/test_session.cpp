#include <gtest/gtest.h>

#include <set>

#include "coxam/json_io.hpp"
#include "coxam/session.hpp"
#include "test_support.hpp"

namespace coxam {
namespace {

SessionConfig config_for(XaiCondition c, VisibilitySchedule schedule = VisibilitySchedule::kPaired,
                         std::uint64_t seed = 1) {
  SessionConfig sc;
  sc.condition = c;
  sc.schedule = schedule;
  sc.seed = seed;
  return sc;
}

TrialResponse label_response(Label l) {
  TrialResponse r;
  r.label = l;
  return r;
}

TrialResponse edit_response(const Session& s, std::size_t attribute) {
  const auto& t = s.current();
  const auto& spec = s.task().models.attributes[attribute];
  Instance x = displayed(t.instance);
  x[attribute] = x[attribute] > (spec.min + spec.max) / 2.0 ? spec.min : spec.max;
  TrialResponse r;
  r.edited_instance = x;
  return r;
}

/// Answers every trial: AI-agreeing labels, then a fixed single-attribute edit.
void run_to_end(Session& s) {
  while (!s.complete()) {
    if (s.current().phase == Phase::kForward) {
      s.submit(label_response(s.current().ai_label));
    } else {
      s.submit(edit_response(s, 0));
    }
  }
}

TEST(Schedule, PhasesAreBalancedAndInstancesDisjoint) {
  const auto task = testing::shared_task();
  for (auto schedule : {VisibilitySchedule::kPaired, VisibilitySchedule::kRandomized}) {
    const auto trials = make_schedule(*task, config_for(XaiCondition::kRules, schedule));
    ASSERT_EQ(trials.size(), 80u);
    std::array<int, 2> positives{};
    std::array<std::set<int>, 2> ids;
    for (const auto& t : trials) {
      const auto p = static_cast<std::size_t>(t.phase);
      positives[p] += t.ai_label == Label::Positive ? 1 : 0;
      ids[p].insert(t.instance_id);
      EXPECT_EQ(task->models.ai.predict(t.instance), t.ai_label);
    }
    EXPECT_EQ(positives[0], 20);
    EXPECT_EQ(positives[1], 20);
    for (int id : ids[0]) EXPECT_FALSE(ids[1].count(id));
  }
}

TEST(Schedule, PairedTrialsShowTheInstanceWithoutThenWith) {
  const auto task = testing::shared_task();
  const auto trials = make_schedule(*task, config_for(XaiCondition::kWeights));
  for (std::size_t i = 0; i + 1 < trials.size(); i += 2) {
    EXPECT_EQ(trials[i].instance_id, trials[i + 1].instance_id);
    EXPECT_FALSE(trials[i].xai_visible);
    EXPECT_TRUE(trials[i + 1].xai_visible);
    EXPECT_EQ(trials[i + 1].shown, SchemaKind::kWeights);
    if (trials[i].phase == Phase::kForward) EXPECT_TRUE(trials[i].feedback_deferred);
  }
}

TEST(Schedule, HybridSplitsShownSchemasEvenly) {
  const auto task = testing::shared_task();
  int weights = 0, rules = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (const auto& t : make_schedule(*task, config_for(XaiCondition::kHybrid, VisibilitySchedule::kPaired, seed))) {
      weights += t.shown == SchemaKind::kWeights ? 1 : 0;
      rules += t.shown == SchemaKind::kRules ? 1 : 0;
    }
  }
  const double share = static_cast<double>(weights) / (weights + rules);
  EXPECT_NEAR(share, 0.5, 0.06);
}

TEST(Schedule, AlwaysAndNeverControlVisibility) {
  const auto task = testing::shared_task();
  for (const auto& t : make_schedule(*task, config_for(XaiCondition::kRules, VisibilitySchedule::kAlways))) {
    EXPECT_TRUE(t.xai_visible);
  }
  for (const auto& t : make_schedule(*task, config_for(XaiCondition::kRules, VisibilitySchedule::kNever))) {
    EXPECT_FALSE(t.xai_visible);
    EXPECT_EQ(t.shown, SchemaKind::kNone);
  }
}

TEST(Session, PairedFeedbackIsReleasedAfterTheSecondTrial) {
  Session s("p1", config_for(XaiCondition::kRules), testing::shared_task());
  const Label first = s.current().ai_label;
  EXPECT_EQ(s.submit(label_response(first)).kind, FeedbackPayload::Kind::kDeferred);
  const FeedbackPayload f = s.submit(label_response(Label::Negative));
  EXPECT_EQ(f.kind, FeedbackPayload::Kind::kFeedback);
  ASSERT_EQ(f.released.size(), 2u);
  EXPECT_EQ(f.released[0].first, 0);
  EXPECT_EQ(f.released[1].first, 1);
}

TEST(Session, WrongResponseKindIsRejected) {
  Session s("p1", config_for(XaiCondition::kRules), testing::shared_task());
  TrialResponse empty;
  EXPECT_THROW(s.submit(empty), Error);
  EXPECT_EQ(s.records().size(), 0u);
  TrialResponse negative_time = label_response(Label::Positive);
  negative_time.response_time_ms = -1.0;
  EXPECT_THROW(s.submit(negative_time), Error);
}

TEST(Session, EditsMustChangeExactlyOneInRangeAttribute) {
  SessionConfig sc = config_for(XaiCondition::kRules);
  sc.n_forward = 0;
  Session s("p1", sc, testing::shared_task());
  ASSERT_EQ(s.current().phase, Phase::kCounterfactual);
  const Instance x = displayed(s.current().instance);
  const auto& spec = s.task().models.attributes[0];
  TrialResponse none;
  none.edited_instance = x;
  TrialResponse two = edit_response(s, 0);
  (*two.edited_instance)[1] = spec.max + 1e6;
  TrialResponse outside;
  outside.edited_instance = x;
  (*outside.edited_instance)[0] = spec.max + 1.0;
  for (const auto& bad : {none, two, outside}) {
    try {
      s.submit(bad);
      FAIL() << "expected an error";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kValidation);
    }
  }
  s.submit(edit_response(s, 0));
  ASSERT_EQ(s.records().size(), 1u);
  EXPECT_EQ(s.records()[0].edit->attribute, 0u);
}

TEST(Session, CompleteSessionRejectsFurtherResponses) {
  Session s("p1", config_for(XaiCondition::kWeights), testing::shared_task());
  run_to_end(s);
  EXPECT_EQ(s.status(), SessionStatus::kComplete);
  EXPECT_EQ(s.records().size(), 80u);
  try {
    s.current();
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kState);
  }
}

TEST(Session, ReplayRebuildsTheSameState) {
  const auto task = testing::shared_task();
  Session s("p1", config_for(XaiCondition::kHybrid), task);
  for (int i = 0; i < 50; ++i) {
    if (s.current().phase == Phase::kForward) {
      s.submit(label_response(Label::Positive));
    } else {
      s.submit(edit_response(s, 2));
    }
  }
  const Session back = Session::replay("p1", s.config(), task, s.records());
  ASSERT_EQ(back.records().size(), s.records().size());
  for (std::size_t i = 0; i < s.records().size(); ++i) {
    EXPECT_EQ(to_json(back.records()[i]), to_json(s.records()[i]));
  }
  EXPECT_EQ(back.current().trial_index, s.current().trial_index);
  EXPECT_EQ(back.status(), s.status());
}

TEST(Session, ConfigValidation) {
  SessionConfig sc;
  sc.n_forward = -1;
  EXPECT_THROW(sc.validate(), Error);
  SessionConfig odd;
  odd.n_forward = 7;
  EXPECT_THROW(odd.validate(), Error);
}

TEST(Score, AgreementAndFlipRates) {
  const auto task = testing::shared_task();
  Session s("p1", config_for(XaiCondition::kRules), task);
  run_to_end(s);
  const SessionScore score = score_records(task->models.ai, s.records());
  EXPECT_EQ(score.n_forward, 40);
  EXPECT_EQ(score.n_counterfactual, 40);
  EXPECT_DOUBLE_EQ(score.forward_accuracy, 1.0);
  EXPECT_EQ(score.n_forward_with_xai, 20);
  EXPECT_EQ(score.n_forward_without_xai, 20);
  int flips = 0;
  for (const auto& r : s.records()) {
    if (r.phase == Phase::kCounterfactual) flips += task->models.ai.predict(r.edit->apply(displayed(r.instance))) != r.ai_label;
  }
  EXPECT_DOUBLE_EQ(score.counterfactual_accuracy, flips / 40.0);
}

TEST(Simulate, SameSeedGivesIdenticalLogs) {
  const auto task = testing::shared_task();
  const Session a = testing::simulate(task, XaiCondition::kHybrid, 9);
  const Session b = testing::simulate(task, XaiCondition::kHybrid, 9);
  ASSERT_TRUE(a.complete());
  ASSERT_EQ(a.records().size(), b.records().size());
  for (std::size_t i = 0; i < a.records().size(); ++i) EXPECT_EQ(to_json(a.records()[i]), to_json(b.records()[i]));
  const Session c = testing::simulate(task, XaiCondition::kHybrid, 10);
  bool differs = false;
  for (std::size_t i = 0; i < a.records().size(); ++i) differs = differs || to_json(a.records()[i]) != to_json(c.records()[i]);
  EXPECT_TRUE(differs);
}

TEST(Simulate, RecordsCarryStrategyDetail) {
  const auto task = testing::shared_task();
  const Session s = testing::simulate(task, XaiCondition::kRules, 4);
  for (const auto& r : s.records()) {
    ASSERT_TRUE(r.simulation.has_value());
    EXPECT_EQ(is_forward(r.simulation->strategy), r.phase == Phase::kForward);
    ASSERT_TRUE(r.simulated_time_s.has_value());
    EXPECT_GE(*r.simulated_time_s, 0.0);
    EXPECT_EQ(validate_trial_record_json(to_json(r)), "");
  }
}

TEST(Simulate, AgentsBeatChanceWithTheExplanation) {
  const auto task = testing::shared_task();
  double total = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    total += score_records(task->models.ai, testing::simulate(task, XaiCondition::kRules, seed).records()).forward_with_xai;
  }
  EXPECT_GT(total / 5.0, 0.6);
}

}  // namespace
}  // namespace coxam
