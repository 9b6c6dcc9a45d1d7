#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coxam/controller.hpp"
#include "coxam/json_io.hpp"
#include "coxam/session.hpp"
#include "coxam/task.hpp"

namespace coxam {

struct PpoConfig {
  /// Desk-scale default; the reference budget is 400,000.
  int total_timesteps = 400'000;
  double learning_rate = 3e-4;
  double discount = 0.8;
  double gae_lambda = 0.95;
  double clip = 0.2;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  /// Steps collected per environment per update; episodes are never cut, so a rollout may run
  /// past this by less than one episode.
  int n_steps = 1024;
  int n_envs = 8;
  int epochs = 10;
  int minibatch = 64;
  int hidden = 64;
  /// Trials per phase; an episode is one session of forward then counterfactual trials.
  int trials_per_phase = 40;
  std::uint64_t seed = 1;

  void validate() const;
};

Json to_json(const PpoConfig& c);
PpoConfig ppo_config_from_json(const Json& j);

/// Fully connected network with tanh hidden layers and a linear output layer.
struct Mlp {
  struct Layer {
    int rows = 0;  // outputs
    int cols = 0;  // inputs
    std::vector<double> weights;  // row-major rows x cols
    std::vector<double> bias;
  };
  std::vector<Layer> layers;

  /// Layer sizes from input to output; weights drawn with variance 1/fan_in, scaled by `last_gain` on the
  /// output layer.
  static Mlp create(const std::vector<int>& sizes, double last_gain, Rng& rng);
  std::vector<double> forward(std::span<const double> input) const;
  std::size_t parameter_count() const;
};

/// Masked categorical actor plus state-value critic.
class PpoPolicy {
 public:
  PpoPolicy() = default;
  PpoPolicy(int hidden, Rng& rng);

  /// Log-probabilities over the catalog; infeasible actions get -inf. Throws kState when the mask is empty.
  std::array<double, kNumActions> log_probs(const StateVector& s, const ActionMask& mask) const;
  double value(const StateVector& s) const;
  std::size_t sample(const StateVector& s, const ActionMask& mask, Rng& rng) const;
  std::size_t mode(const StateVector& s, const ActionMask& mask) const;

  Mlp actor;
  Mlp critic;
  Json hyperparameters = Json::object();
};

Json to_json(const PpoPolicy& p);
/// Throws kParse on a malformed checkpoint and kValidation on a shape mismatch.
PpoPolicy ppo_policy_from_json(const Json& j);
void save_policy(const PpoPolicy& p, const std::string& path);
PpoPolicy load_policy(const std::string& path);

/// Samples from a trained policy (or takes its mode when deterministic).
class PolicyController final : public Controller {
 public:
  explicit PolicyController(std::shared_ptr<const PpoPolicy> policy, bool deterministic = false);
  std::size_t select(const DecisionPoint& point, Rng& rng) override;
  std::string_view name() const override { return "ppo"; }

 private:
  std::shared_ptr<const PpoPolicy> policy_;
  bool deterministic_;
};

/// Uniform over feasible actions; the untrained reference for policy evaluation.
class UniformController final : public Controller {
 public:
  std::size_t select(const DecisionPoint& point, Rng& rng) override;
  std::string_view name() const override { return "uniform"; }
};

/// Environment setting for one episode: a task, an XAI condition and sampled cognitive parameters.
struct EpisodeSpec {
  std::shared_ptr<const Task> task;
  XaiCondition condition = XaiCondition::kRules;
  CognitiveParams params;
  std::uint64_t seed = 1;
};

/// Per-trial reward V = U - gamma T: forward U is the response's agreement probability with the AI
/// label; counterfactual U is 1 when the committed edit flips the AI.
std::vector<double> episode_rewards(const Task& task, const Session& session, const CognitiveParams& params);

/// Samples an episode setting from `tasks`: condition cycles by episode, parameters are uniform over
/// the fitting ranges.
EpisodeSpec sample_episode(const std::vector<std::shared_ptr<const Task>>& tasks, std::uint64_t episode,
                           std::uint64_t seed);

/// Runs one session under `controller` and returns its total reward.
double run_episode(const EpisodeSpec& spec, Controller& controller, int trials_per_phase);

/// Auxiliary tasks for pre-training: one linear-dominant and one tree-dominant synthetic task at both
/// complexities.
std::vector<std::shared_ptr<const Task>> pretraining_tasks(std::uint64_t seed, std::size_t n_rows = 1200);

/// Generalized advantage estimates for one episode that ends in a terminal state. With zero values and
/// lambda = 1 they are the discounted returns.
std::vector<double> gae_advantages(std::span<const double> rewards, std::span<const double> values, double discount,
                                   double lambda);

struct TrainReport {
  PpoPolicy policy;
  int timesteps = 0;
  int updates = 0;
  std::vector<double> mean_episode_reward;
  bool diverged = false;
  std::string message;
};

/// PPO with clipped surrogate, GAE and Adam. When a loss or gradient turns non-finite the run stops and
/// the report holds the last valid policy with `diverged` set. A non-empty `checkpoint` path receives the
/// policy after every update.
TrainReport ppo_train(const std::vector<std::shared_ptr<const Task>>& tasks, const PpoConfig& config,
                      const std::string& checkpoint = {});

}  // namespace coxam
