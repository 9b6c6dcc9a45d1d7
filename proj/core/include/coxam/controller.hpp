#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "coxam/context.hpp"
#include "coxam/counterfactual.hpp"
#include "coxam/forward.hpp"
#include "coxam/params.hpp"

namespace coxam {

enum class Strategy {
  kApproximateCalculation,
  kFeatureAttribution,
  kAtaTraversal,
  kInverseCalculation,
  kInverseFeatureAttribution,
  kNodeThresholdCrossing,
  kAvailabilityHeuristic,
};

inline constexpr std::size_t kNumStrategies = 7;

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);
inline bool is_forward(Strategy s) { return s <= Strategy::kAtaTraversal; }

inline constexpr std::array<double, 4> kEffortGrid{0.5, 1.0, 2.0, 4.0};
inline constexpr std::array<int, 4> kSubsetSizes{1, 2, 3, 6};
inline constexpr std::array<int, 3> kDepthPreferences{0, 1, 2};

/// One controller choice: a strategy and its knobs. Unused knobs stay zero.
struct Action {
  std::size_t index = 0;
  Strategy strategy = Strategy::kFeatureAttribution;
  double effort = 0.0;
  int subset_size = 0;
  int depth = 0;
};

inline constexpr std::size_t kNumActions = 42;
using ActionMask = std::array<bool, kNumActions>;

/// Fixed order: approximate calculation (effort x subset size), feature attribution (same),
/// tree traversal (effort), inverse calculation, inverse feature attribution, threshold
/// crossing (depth), availability heuristic.
const std::array<Action, kNumActions>& action_catalog();

/// Attribute indices of the k most important attributes: by |w| when the weights are shown,
/// otherwise by |mu| of the mental factors. Ties keep attribute order.
std::vector<std::size_t> ranked_subset(const TrialContext& ctx, int k);

/// Actions available on this trial. Shown explanations expose their own strategies; hidden
/// trials expose the strategies of the condition's schemas, executed from memory.
ActionMask feasible_actions(const TrialContext& ctx, Phase phase, XaiCondition condition);

struct ValueEstimate {
  double utility = 0.0;
  double expected_time = 0.0;
  double value = 0.0;
};

/// V = U - gamma * T.
ValueEstimate make_value(double utility, double expected_time, double gamma);

/// Realized forward utility: p if the AI said +1, 1 - p otherwise.
double forward_utility(double p_positive, Label ai_label);
/// Expected correctness before the AI label is known: max(p, 1 - p).
double planning_forward_utility(double p_positive);
/// Expected agreement of a response drawn with P(+1) = p and an AI label believed +1 with
/// probability q. Reduces to planning_forward_utility when q is the response's own label.
double planning_agreement(double p_positive, double q_positive);
/// The agent's subjective P(AI says +1): the shown explanation's label, else the recalled tree
/// leaf weighted by its recall probability, else the belief score's sign probability
/// Phi(mu.z / sqrt(sum sigma^2 z^2)).
double subjective_positive(const TrialContext& ctx, XaiCondition condition, const Instance& x);
/// Probability mass of edits whose label under `model` differs from `original`.
double counterfactual_utility(const EditDistribution& dist, const Instance& x, const Classifier& model,
                              Label original);

/// Label the agent attributes to an instance: the shown explanation, else the recalled tree in
/// a Rules condition, else the sign of the mental-factor score.
Label internal_label(const TrialContext& ctx, XaiCondition condition, const Instance& x);

/// Running per-episode statistics over completed trials.
struct EpisodeStats {
  struct PerStrategy {
    int uses = 0;
    double total_time = 0.0;
    double successes = 0.0;
  };
  std::array<PerStrategy, kNumStrategies> strategies{};
  Instance partial_sum_total{};
  std::array<int, kNumAttributes> partial_sum_count{};
  int trials = 0;

  void record(Strategy s, double time, double success);
  void record_partial_sums(const std::array<std::optional<double>, kNumAttributes>& sums);
};

/// Everything a controller may look at when choosing.
struct DecisionPoint {
  const TrialContext* ctx = nullptr;
  Phase phase = Phase::kForward;
  XaiCondition condition = XaiCondition::kWeights;
  CognitiveParams params;
  const EpisodeStats* stats = nullptr;
  ActionMask mask{};
  int trial_in_phase = 0;
  int trials_per_phase = 40;
};

inline constexpr std::size_t kStateSize = 37;
using StateVector = std::array<double, kStateSize>;

/// Parameters, trial flags, per-strategy statistics and mean partial sums.
StateVector state_features(const DecisionPoint& point);

/// Side-effect-free value forecasts for every feasible action (nullopt elsewhere).
std::array<std::optional<ValueEstimate>, kNumActions> plan_values(const DecisionPoint& point);

class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::size_t select(const DecisionPoint& point, Rng& rng) = 0;
  virtual std::string_view name() const = 0;
};

/// Picks the feasible action with the highest forecast value; ties go to the shorter
/// expected time, then to catalog order.
class MyopicController final : public Controller {
 public:
  std::size_t select(const DecisionPoint& point, Rng& rng) override;
  std::string_view name() const override { return "myopic"; }
};

/// Wraps another controller and hides every action outside `allowed`. A trial where none of
/// the allowed strategies is feasible keeps the full mask.
class RestrictedController final : public Controller {
 public:
  RestrictedController(Controller& inner, std::vector<Strategy> allowed);
  std::size_t select(const DecisionPoint& point, Rng& rng) override;
  std::string_view name() const override { return "restricted"; }

 private:
  Controller& inner_;
  std::vector<Strategy> allowed_;
};

/// Index of the best forecast under the myopic tie rules; throws kState when nothing is feasible.
std::size_t argmax_value(const std::array<std::optional<ValueEstimate>, kNumActions>& values);

}  // namespace coxam
