#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coxam/agent.hpp"
#include "coxam/task.hpp"

namespace coxam {

/// Order of with- and without-explanation trials within a phase.
enum class VisibilitySchedule {
  /// Each instance twice: first without, then with the explanation; feedback after the pair.
  kPaired,
  /// Each instance once, visibility drawn per trial with equal odds.
  kRandomized,
  kAlways,
  kNever,
};

std::string_view visibility_schedule_name(VisibilitySchedule s);
VisibilitySchedule parse_visibility_schedule(std::string_view name);

struct SessionConfig {
  std::string scenario = "wine";
  XaiCondition condition = XaiCondition::kRules;
  Complexity complexity = Complexity::kHigh;
  int n_forward = 40;
  int n_counterfactual = 40;
  std::uint64_t seed = 1;
  VisibilitySchedule schedule = VisibilitySchedule::kPaired;
  std::string participant_id;

  void validate() const;
};

enum class SessionStatus { kCreated, kForward, kCounterfactual, kComplete };

std::string_view session_status_name(SessionStatus s);

struct ScheduledTrial {
  int trial_index = 0;
  Phase phase = Phase::kForward;
  int instance_id = 0;
  Instance instance{};
  bool xai_visible = false;
  SchemaKind shown = SchemaKind::kNone;
  Label ai_label = Label::Positive;
  Label surrogate_label = Label::Positive;
  /// Feedback for this trial is given after a later trial on the same instance.
  bool feedback_deferred = false;
};

/// Simulation-only detail attached to a record.
struct SimulationDetail {
  Strategy strategy = Strategy::kFeatureAttribution;
  std::size_t action_index = 0;
  double effort = 0.0;
  int subset_size = 0;
  int depth = 0;
  double p_positive = 0.5;
  double evidence = 0.0;
  int n_reads = 0;
  int n_calcs = 0;
  double execution_time = 0.0;
  bool guessed = false;
  bool cold_start = false;
  bool fell_back = false;
  /// The agent's intended edit left the attribute range and was clamped.
  bool clamped = false;
  std::optional<Label> target;
  Instance attribute_probabilities{};
  std::vector<TraceStep> trace;
};

struct TrialRecord {
  int trial_index = 0;
  Phase phase = Phase::kForward;
  int instance_id = 0;
  bool xai_visible = false;
  SchemaKind shown = SchemaKind::kNone;
  Instance instance{};
  Label ai_label = Label::Positive;
  Label surrogate_label = Label::Positive;
  std::optional<Label> response_label;
  std::optional<Edit> edit;
  std::optional<double> response_time_ms;
  std::optional<double> simulated_time_s;
  bool feedback_shown = false;
  bool feedback_deferred = false;
  std::optional<SimulationDetail> simulation;
};

/// A participant's answer to one trial.
struct TrialResponse {
  std::optional<Label> label;
  /// Counterfactual answer as the full edited instance (validated to differ in one attribute).
  std::optional<Instance> edited_instance;
  std::optional<double> response_time_ms;
};

struct FeedbackPayload {
  enum class Kind { kFeedback, kDeferred, kAcknowledged };
  Kind kind = Kind::kAcknowledged;
  /// AI labels of every instance whose feedback is released now, in trial order.
  std::vector<std::pair<int, Label>> released;
};

/// One participant's run through both phases. Single-threaded; callers serialize access.
class Session {
 public:
  Session(std::string id, SessionConfig config, std::shared_ptr<const Task> task);

  const std::string& id() const { return id_; }
  const SessionConfig& config() const { return config_; }
  const Task& task() const { return *task_; }
  SessionStatus status() const { return status_; }
  const std::vector<ScheduledTrial>& schedule() const { return schedule_; }
  const std::vector<TrialRecord>& records() const { return records_; }
  bool complete() const { return status_ == SessionStatus::kComplete; }

  /// The trial awaiting a response; throws kState once the session is complete.
  const ScheduledTrial& current() const;

  /// Validates and records a response. Throws kValidation for malformed answers.
  FeedbackPayload submit(const TrialResponse& response,
                         std::optional<SimulationDetail> simulation = std::nullopt,
                         std::optional<double> simulated_time_s = std::nullopt);

  /// Rebuilds a session from its persisted records (responses are revalidated).
  static Session replay(std::string id, SessionConfig config, std::shared_ptr<const Task> task,
                        const std::vector<TrialRecord>& records);

 private:
  void build_schedule();

  std::string id_;
  SessionConfig config_;
  std::shared_ptr<const Task> task_;
  std::vector<ScheduledTrial> schedule_;
  std::vector<TrialRecord> records_;
  std::size_t cursor_ = 0;
  SessionStatus status_ = SessionStatus::kCreated;
};

/// Builds the trial schedule: balanced, fidelity-controlled instances per phase, visibility
/// per the schedule, and a uniform Weights/Rules draw for each Hybrid trial with explanation.
std::vector<ScheduledTrial> make_schedule(const Task& task, const SessionConfig& config);

struct SessionScore {
  double forward_accuracy = 0.0;
  double counterfactual_accuracy = 0.0;
  int n_forward = 0;
  int n_counterfactual = 0;
  /// Accuracies restricted to trials with and without the explanation.
  double forward_with_xai = 0.0;
  double forward_without_xai = 0.0;
  int n_forward_with_xai = 0;
  int n_forward_without_xai = 0;
};

/// Forward accuracy is agreement with the AI label; counterfactual accuracy is the fraction of
/// edits that change the true AI's prediction.
SessionScore score_records(const AiModel& ai, const std::vector<TrialRecord>& records);

/// Runs a simulated agent through a fresh session with the given schedule.
Session simulate_session(std::string id, const SessionConfig& config, std::shared_ptr<const Task> task,
                         const CognitiveParams& params, Controller& controller, std::uint64_t agent_seed);

}  // namespace coxam
