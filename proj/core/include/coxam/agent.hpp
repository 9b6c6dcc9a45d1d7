#pragma once

#include <optional>

#include "coxam/controller.hpp"

namespace coxam {

/// Seconds between consecutive trials.
inline constexpr double kInterTrialInterval = 2.0;

struct ForwardDecision {
  Action action;
  ForwardResult result;
  Label response = Label::Positive;
};

struct CounterfactualDecision {
  Action action;
  EditDistribution distribution;
  Edit edit;
  /// The class the agent is trying to reach (opposite of its internal label).
  Label target = Label::Positive;
  Label internal = Label::Negative;
  /// Set when the chosen strategy produced no edit and the availability heuristic stood in.
  bool fell_back = false;
  double total_time = 0.0;
};

/// One simulated participant: memory, mental factors and a controller, run through a session.
/// Not thread-safe; each agent owns its state and random stream.
class Agent {
 public:
  Agent(const TaskModels& task, XaiCondition condition, const CognitiveParams& params,
        Controller& controller, std::uint64_t seed);

  /// Tutorial study at t = 0: encodes the condition's explanation chunks and initial beliefs.
  void study();

  /// Chooses and runs a forward strategy, then samples the response. `forced_action` skips the
  /// controller (diagnostics and tests).
  ForwardDecision forward_trial(const Instance& x, SchemaKind shown, int trial_in_phase,
                                std::optional<std::size_t> forced_action = std::nullopt);

  /// Feedback after the AI label is revealed: one belief update per instance plus a review of
  /// the shown explanation.
  void forward_feedback(const Instance& x, Label ai_label, SchemaKind shown);

  /// Credits the last forward decision in the episode statistics.
  void record_forward_outcome(const ForwardDecision& d, Label ai_label);

  CounterfactualDecision counterfactual_trial(const Instance& x, SchemaKind shown, int trial_in_phase,
                                              std::optional<std::size_t> forced_action = std::nullopt);

  /// Stores the submitted edit as an availability chunk. Simulation commits its own sampled
  /// edit; fitting commits the participant's edit instead.
  void commit_edit(Label target, const Edit& edit);

  /// Counts an edit as a success when it flips the agent's own model.
  void record_counterfactual_outcome(const CounterfactualDecision& d, bool internal_success);

  TrialContext context(const Instance& x, SchemaKind shown);
  DecisionPoint decision_point(const TrialContext& ctx, Phase phase, int trial_in_phase) const;

  const MemoryStore& memory() const { return memory_; }
  const MentalFactors& beliefs() const { return beliefs_; }
  const EpisodeStats& stats() const { return stats_; }
  const CognitiveParams& params() const { return params_; }
  XaiCondition condition() const { return condition_; }
  const TaskModels& task() const { return *task_; }
  Rng& rng() { return rng_; }

 private:
  void begin_trial();

  const TaskModels* task_;
  XaiCondition condition_;
  CognitiveParams params_;
  Controller* controller_;
  Rng rng_;
  MemoryStore memory_;
  MentalFactors beliefs_;
  EpisodeStats stats_;
  bool studied_ = false;
};

}  // namespace coxam
