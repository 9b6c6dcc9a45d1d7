#include "coxam/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

namespace coxam {

void PpoConfig::validate() const {
  const auto require = [](bool ok, const char* field) {
    if (!ok) throw Error(ErrorCode::kValidation, std::string("ppo.") + field + " is out of range");
  };
  require(total_timesteps > 0, "total_timesteps");
  require(learning_rate > 0.0, "learning_rate");
  require(discount >= 0.0 && discount <= 1.0, "discount");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda");
  require(clip > 0.0, "clip");
  require(entropy_coef >= 0.0, "entropy_coef");
  require(value_coef >= 0.0, "value_coef");
  require(max_grad_norm > 0.0, "max_grad_norm");
  require(n_steps > 0, "n_steps");
  require(n_envs > 0, "n_envs");
  require(epochs > 0, "epochs");
  require(minibatch > 0, "minibatch");
  require(hidden > 0, "hidden");
  require(trials_per_phase > 0, "trials_per_phase");
}

Json to_json(const PpoConfig& c) {
  return Json{{"total_timesteps", c.total_timesteps}, {"learning_rate", c.learning_rate},
              {"discount", c.discount},               {"gae_lambda", c.gae_lambda},
              {"clip", c.clip},                       {"entropy_coef", c.entropy_coef},
              {"value_coef", c.value_coef},           {"max_grad_norm", c.max_grad_norm},
              {"n_steps", c.n_steps},                 {"n_envs", c.n_envs},
              {"epochs", c.epochs},                   {"minibatch", c.minibatch},
              {"hidden", c.hidden},                   {"trials_per_phase", c.trials_per_phase},
              {"seed", c.seed}};
}

PpoConfig ppo_config_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kValidation, "ppo config must be an object");
  PpoConfig c;
  const Json defaults = to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw Error(ErrorCode::kValidation, "unknown ppo key '" + key + "'");
    if (!value.is_number()) throw Error(ErrorCode::kValidation, "ppo." + key + " must be a number");
  }
  const auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  get("total_timesteps", c.total_timesteps);
  get("learning_rate", c.learning_rate);
  get("discount", c.discount);
  get("gae_lambda", c.gae_lambda);
  get("clip", c.clip);
  get("entropy_coef", c.entropy_coef);
  get("value_coef", c.value_coef);
  get("max_grad_norm", c.max_grad_norm);
  get("n_steps", c.n_steps);
  get("n_envs", c.n_envs);
  get("epochs", c.epochs);
  get("minibatch", c.minibatch);
  get("hidden", c.hidden);
  get("trials_per_phase", c.trials_per_phase);
  get("seed", c.seed);
  c.validate();
  return c;
}

namespace {

using Matrix = Eigen::MatrixXd;
using RowMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

ConstRowMap weights_of(const Mlp::Layer& l) { return {l.weights.data(), l.rows, l.cols}; }
ConstVecMap bias_of(const Mlp::Layer& l) { return {l.bias.data(), l.rows}; }

// Column-batched forward pass keeping every layer's output for backpropagation.
std::vector<Matrix> forward_batch(const Mlp& net, const Matrix& input) {
  std::vector<Matrix> acts{input};
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    Matrix z = weights_of(net.layers[i]) * acts.back();
    z.colwise() += bias_of(net.layers[i]);
    if (i + 1 < net.layers.size()) z = z.array().tanh().matrix();
    acts.push_back(std::move(z));
  }
  return acts;
}

// Accumulates d(loss)/d(params) into `grad` (same layout as the network) given d(loss)/d(output).
void backward_batch(const Mlp& net, const std::vector<Matrix>& acts, Matrix delta, Mlp& grad) {
  for (std::size_t i = net.layers.size(); i-- > 0;) {
    RowMap gw(grad.layers[i].weights.data(), grad.layers[i].rows, grad.layers[i].cols);
    VecMap gb(grad.layers[i].bias.data(), grad.layers[i].rows);
    gw += delta * acts[i].transpose();
    gb += delta.rowwise().sum();
    if (i == 0) break;
    Matrix back = weights_of(net.layers[i]).transpose() * delta;
    delta = back.array() * (1.0 - acts[i].array().square());
  }
}

Mlp zeros_like(const Mlp& net) {
  Mlp z = net;
  for (auto& l : z.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  return z;
}

template <typename F>
void for_each_param(Mlp& net, F&& f) {
  for (auto& l : net.layers) {
    for (auto& w : l.weights) f(w);
    for (auto& b : l.bias) f(b);
  }
}

std::vector<double*> param_pointers(Mlp& net) {
  std::vector<double*> out;
  for_each_param(net, [&](double& v) { out.push_back(&v); });
  return out;
}

Json layer_json(const Mlp::Layer& l) {
  return Json{{"rows", l.rows}, {"cols", l.cols}, {"weights", l.weights}, {"bias", l.bias}};
}

Mlp mlp_from_json(const Json& j, int inputs, int outputs, const char* what) {
  if (!j.is_object() || !j.contains("layers") || !j["layers"].is_array() || j["layers"].empty()) {
    throw Error(ErrorCode::kParse, std::string(what) + " needs a non-empty layers array");
  }
  Mlp net;
  int expected_cols = inputs;
  for (const auto& lj : j["layers"]) {
    Mlp::Layer l;
    l.rows = lj.at("rows").get<int>();
    l.cols = lj.at("cols").get<int>();
    l.weights = lj.at("weights").get<std::vector<double>>();
    l.bias = lj.at("bias").get<std::vector<double>>();
    if (l.cols != expected_cols || l.rows < 1 ||
        l.weights.size() != static_cast<std::size_t>(l.rows) * static_cast<std::size_t>(l.cols) ||
        l.bias.size() != static_cast<std::size_t>(l.rows)) {
      throw Error(ErrorCode::kValidation, std::string(what) + " layer shapes do not chain");
    }
    for (double v : l.weights) {
      if (!std::isfinite(v)) throw Error(ErrorCode::kValidation, std::string(what) + " holds a non-finite weight");
    }
    expected_cols = l.rows;
    net.layers.push_back(std::move(l));
  }
  if (expected_cols != outputs) throw Error(ErrorCode::kValidation, std::string(what) + " has the wrong output size");
  return net;
}

struct Transition {
  StateVector state{};
  ActionMask mask{};
  std::size_t action = 0;
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;
  double advantage = 0.0;
  double ret = 0.0;
};

class RolloutController final : public Controller {
 public:
  RolloutController(const PpoPolicy& policy, std::vector<Transition>& out) : policy_(policy), out_(out) {}
  std::size_t select(const DecisionPoint& point, Rng& rng) override {
    Transition t;
    t.state = state_features(point);
    t.mask = point.mask;
    t.action = policy_.sample(t.state, t.mask, rng);
    t.log_prob = policy_.log_probs(t.state, t.mask)[t.action];
    t.value = policy_.value(t.state);
    out_.push_back(t);
    return t.action;
  }
  std::string_view name() const override { return "rollout"; }

 private:
  const PpoPolicy& policy_;
  std::vector<Transition>& out_;
};

struct Adam {
  std::vector<double> m, v;
  int t = 0;
  void step(const std::vector<double*>& params, const std::vector<double>& grads, double lr) {
    if (m.empty()) {
      m.assign(params.size(), 0.0);
      v.assign(params.size(), 0.0);
    }
    ++t;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grads[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grads[i] * grads[i];
      *params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
};

std::vector<double> flatten(Mlp& net) {
  std::vector<double> out;
  for_each_param(net, [&](double& v) { out.push_back(v); });
  return out;
}

}  // namespace

Mlp Mlp::create(const std::vector<int>& sizes, double last_gain, Rng& rng) {
  if (sizes.size() < 2) throw Error(ErrorCode::kPrecondition, "a network needs input and output sizes");
  Mlp net;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    Layer l;
    l.cols = sizes[i];
    l.rows = sizes[i + 1];
    const double scale = (i + 2 == sizes.size() ? last_gain : 1.0) / std::sqrt(static_cast<double>(l.cols));
    l.weights.resize(static_cast<std::size_t>(l.rows) * static_cast<std::size_t>(l.cols));
    for (auto& w : l.weights) w = scale * normal(rng);
    l.bias.assign(static_cast<std::size_t>(l.rows), 0.0);
    net.layers.push_back(std::move(l));
  }
  return net;
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  Matrix x(static_cast<Eigen::Index>(input.size()), 1);
  for (std::size_t i = 0; i < input.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = input[i];
  const auto acts = forward_batch(*this, x);
  const Matrix& y = acts.back();
  return {y.data(), y.data() + y.size()};
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

PpoPolicy::PpoPolicy(int hidden, Rng& rng)
    : actor(Mlp::create({static_cast<int>(kStateSize), hidden, hidden, static_cast<int>(kNumActions)}, 0.01, rng)),
      critic(Mlp::create({static_cast<int>(kStateSize), hidden, hidden, 1}, 1.0, rng)) {}

std::array<double, kNumActions> PpoPolicy::log_probs(const StateVector& s, const ActionMask& mask) const {
  const auto logits = actor.forward(s);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < kNumActions; ++a) {
    if (mask[a]) top = std::max(top, logits[a]);
  }
  if (!std::isfinite(top)) throw Error(ErrorCode::kState, "no feasible action to choose from");
  double total = 0.0;
  for (std::size_t a = 0; a < kNumActions; ++a) {
    if (mask[a]) total += std::exp(logits[a] - top);
  }
  const double log_z = top + std::log(total);
  std::array<double, kNumActions> out;
  for (std::size_t a = 0; a < kNumActions; ++a) {
    out[a] = mask[a] ? logits[a] - log_z : -std::numeric_limits<double>::infinity();
  }
  return out;
}

double PpoPolicy::value(const StateVector& s) const { return critic.forward(s)[0]; }

std::size_t PpoPolicy::sample(const StateVector& s, const ActionMask& mask, Rng& rng) const {
  const auto lp = log_probs(s, mask);
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  std::size_t last = 0;
  for (std::size_t a = 0; a < kNumActions; ++a) {
    if (!mask[a]) continue;
    last = a;
    u -= std::exp(lp[a]);
    if (u < 0.0) return a;
  }
  return last;
}

std::size_t PpoPolicy::mode(const StateVector& s, const ActionMask& mask) const {
  const auto lp = log_probs(s, mask);
  return static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
}

Json to_json(const PpoPolicy& p) {
  Json actor = Json::array();
  for (const auto& l : p.actor.layers) actor.push_back(layer_json(l));
  Json critic = Json::array();
  for (const auto& l : p.critic.layers) critic.push_back(layer_json(l));
  return Json{{"schema_version", kSchemaVersion},
              {"kind", "ppo_policy"},
              {"state_size", kStateSize},
              {"n_actions", kNumActions},
              {"activation", "tanh"},
              {"hyperparameters", p.hyperparameters},
              {"actor", {{"layers", actor}}},
              {"critic", {{"layers", critic}}}};
}

PpoPolicy ppo_policy_from_json(const Json& j) {
  try {
    if (!j.is_object() || j.value("kind", "") != "ppo_policy") {
      throw Error(ErrorCode::kParse, "not a policy checkpoint");
    }
    check_schema_version(j, "policy checkpoint");
    if (j.at("state_size").get<std::size_t>() != kStateSize || j.at("n_actions").get<std::size_t>() != kNumActions) {
      throw Error(ErrorCode::kValidation, "checkpoint was trained for a different state or action space");
    }
    PpoPolicy p;
    p.actor = mlp_from_json(j.at("actor"), static_cast<int>(kStateSize), static_cast<int>(kNumActions), "actor");
    p.critic = mlp_from_json(j.at("critic"), static_cast<int>(kStateSize), 1, "critic");
    p.hyperparameters = j.value("hyperparameters", Json::object());
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed policy checkpoint: ") + e.what());
  }
}

void save_policy(const PpoPolicy& p, const std::string& path) { write_json_file(path, to_json(p)); }

PpoPolicy load_policy(const std::string& path) { return ppo_policy_from_json(read_json_file(path)); }

PolicyController::PolicyController(std::shared_ptr<const PpoPolicy> policy, bool deterministic)
    : policy_(std::move(policy)), deterministic_(deterministic) {
  if (!policy_) throw Error(ErrorCode::kPrecondition, "policy controller needs a policy");
}

std::size_t PolicyController::select(const DecisionPoint& point, Rng& rng) {
  const StateVector s = state_features(point);
  return deterministic_ ? policy_->mode(s, point.mask) : policy_->sample(s, point.mask, rng);
}

std::size_t UniformController::select(const DecisionPoint& point, Rng& rng) {
  std::vector<std::size_t> feasible;
  for (std::size_t a = 0; a < kNumActions; ++a) {
    if (point.mask[a]) feasible.push_back(a);
  }
  if (feasible.empty()) throw Error(ErrorCode::kState, "no feasible action to choose from");
  return feasible[std::uniform_int_distribution<std::size_t>(0, feasible.size() - 1)(rng)];
}

std::vector<double> episode_rewards(const Task& task, const Session& session, const CognitiveParams& params) {
  std::vector<double> out;
  for (const auto& r : session.records()) {
    double utility = 0.0;
    if (r.phase == Phase::kForward) {
      if (!r.simulation) throw Error(ErrorCode::kPrecondition, "rewards need simulated records");
      utility = forward_utility(r.simulation->p_positive, r.ai_label);
    } else {
      if (!r.edit) throw Error(ErrorCode::kPrecondition, "counterfactual record without an edit");
      utility = task.models.ai.predict(r.edit->apply(r.instance)) != r.ai_label ? 1.0 : 0.0;
    }
    out.push_back(make_value(utility, r.simulated_time_s.value_or(0.0), params.gamma).value);
  }
  return out;
}

EpisodeSpec sample_episode(const std::vector<std::shared_ptr<const Task>>& tasks, std::uint64_t episode,
                           std::uint64_t seed) {
  if (tasks.empty()) throw Error(ErrorCode::kPrecondition, "training needs at least one task");
  static constexpr std::array<XaiCondition, 3> kConditions{XaiCondition::kWeights, XaiCondition::kRules,
                                                           XaiCondition::kHybrid};
  Rng rng(derive_seed(seed, episode));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EpisodeSpec spec;
  spec.task = tasks[std::uniform_int_distribution<std::size_t>(0, tasks.size() - 1)(rng)];
  spec.condition = kConditions[episode % kConditions.size()];
  spec.params.kappa = -3.0 + 5.0 * u(rng);
  spec.params.gamma = 0.1 * u(rng);
  spec.params.nu = 0.3 + 2.7 * u(rng);
  spec.params.epsilon = 0.01 + 0.49 * u(rng);
  spec.seed = rng();
  return spec;
}

namespace {

Session episode_session(const EpisodeSpec& spec, Controller& controller, int trials_per_phase) {
  SessionConfig config;
  config.scenario = spec.task->scenario;
  config.complexity = spec.task->complexity;
  config.condition = spec.condition;
  config.n_forward = trials_per_phase;
  config.n_counterfactual = trials_per_phase;
  config.seed = spec.seed;
  return simulate_session("episode", config, spec.task, spec.params, controller, derive_seed(spec.seed, 1));
}

}  // namespace

double run_episode(const EpisodeSpec& spec, Controller& controller, int trials_per_phase) {
  const Session s = episode_session(spec, controller, trials_per_phase);
  const auto rewards = episode_rewards(*spec.task, s, spec.params);
  return std::accumulate(rewards.begin(), rewards.end(), 0.0);
}

std::vector<std::shared_ptr<const Task>> pretraining_tasks(std::uint64_t seed, std::size_t n_rows) {
  constexpr int kAttempts = 8;
  std::vector<std::shared_ptr<const Task>> out;
  std::uint64_t stream = 0;
  for (const SyntheticKind kind : {SyntheticKind::kLinear, SyntheticKind::kTree}) {
    for (const Complexity c : {Complexity::kLow, Complexity::kHigh}) {
      std::shared_ptr<const Task> task;
      for (int attempt = 0; attempt < kAttempts && !task; ++attempt) {
        TrainConfig ai;
        ai.seed = derive_seed(seed, stream++);
        Dataset d = make_synthetic_dataset(kind, n_rows, derive_seed(seed, stream++));
        auto candidate = std::make_shared<const Task>(
            build_task(std::move(d), std::string(synthetic_kind_name(kind)), c, ai));
        // Every condition must admit a balanced, fidelity-controlled schedule.
        try {
          for (const XaiCondition cond : {XaiCondition::kWeights, XaiCondition::kRules, XaiCondition::kHybrid}) {
            SessionConfig config;
            config.scenario = candidate->scenario;
            config.complexity = c;
            config.condition = cond;
            Session probe("probe", config, candidate);
          }
          task = std::move(candidate);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kInfeasible && e.code() != ErrorCode::kDatasetTooSmall) throw;
        }
      }
      if (!task) {
        throw Error(ErrorCode::kInfeasible, "no feasible " + std::string(synthetic_kind_name(kind)) +
                                                " pre-training task after " + std::to_string(kAttempts) + " data seeds");
      }
      out.push_back(std::move(task));
    }
  }
  return out;
}

std::vector<double> gae_advantages(std::span<const double> rewards, std::span<const double> values, double discount,
                                   double lambda) {
  if (rewards.size() != values.size()) throw Error(ErrorCode::kPrecondition, "rewards and values differ in length");
  std::vector<double> adv(rewards.size());
  double gae = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    const double next = i + 1 < rewards.size() ? values[i + 1] : 0.0;
    gae = rewards[i] + discount * next - values[i] + discount * lambda * gae;
    adv[i] = gae;
  }
  return adv;
}

TrainReport ppo_train(const std::vector<std::shared_ptr<const Task>>& tasks, const PpoConfig& config,
                      const std::string& checkpoint) {
  config.validate();
  if (tasks.empty()) throw Error(ErrorCode::kPrecondition, "training needs at least one task");
  Rng rng(config.seed);
  TrainReport report;
  PpoPolicy policy(config.hidden, rng);
  policy.hyperparameters = to_json(config);
  PpoPolicy last_valid = policy;
  Adam actor_opt, critic_opt;
  std::uint64_t episode = 0;

  while (report.timesteps < config.total_timesteps) {
    // Rollout: each environment plays whole episodes until it has n_steps transitions.
    std::vector<Transition> batch;
    std::vector<std::pair<std::size_t, std::size_t>> episodes;
    double reward_total = 0.0;
    for (int env = 0; env < config.n_envs; ++env) {
      std::size_t env_steps = 0;
      while (env_steps < static_cast<std::size_t>(config.n_steps)) {
        const EpisodeSpec spec = sample_episode(tasks, episode++, config.seed);
        const std::size_t begin = batch.size();
        RolloutController rollout(policy, batch);
        const Session s = episode_session(spec, rollout, config.trials_per_phase);
        const auto rewards = episode_rewards(*spec.task, s, spec.params);
        if (rewards.size() != batch.size() - begin) {
          throw Error(ErrorCode::kInvariant, "one controller decision per trial expected");
        }
        for (std::size_t i = 0; i < rewards.size(); ++i) {
          batch[begin + i].reward = rewards[i];
          reward_total += rewards[i];
        }
        episodes.emplace_back(begin, batch.size());
        env_steps += rewards.size();
      }
    }
    report.timesteps += static_cast<int>(batch.size());
    report.mean_episode_reward.push_back(reward_total / static_cast<double>(episodes.size()));

    // Generalized advantage estimation; episodes end in a true terminal state.
    for (const auto& [begin, end] : episodes) {
      std::vector<double> rewards, values;
      for (std::size_t i = begin; i < end; ++i) {
        rewards.push_back(batch[i].reward);
        values.push_back(batch[i].value);
      }
      const auto adv = gae_advantages(rewards, values, config.discount, config.gae_lambda);
      for (std::size_t i = begin; i < end; ++i) {
        batch[i].advantage = adv[i - begin];
        batch[i].ret = adv[i - begin] + batch[i].value;
      }
    }

    std::vector<std::size_t> order(batch.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    bool diverged = false;
    for (int epoch = 0; epoch < config.epochs && !diverged; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size() && !diverged; start += static_cast<std::size_t>(config.minibatch)) {
        const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.minibatch));
        const auto b = static_cast<Eigen::Index>(stop - start);
        Matrix x(static_cast<Eigen::Index>(kStateSize), b);
        Eigen::VectorXd adv(b);
        for (Eigen::Index c = 0; c < b; ++c) {
          const Transition& t = batch[order[start + static_cast<std::size_t>(c)]];
          for (std::size_t i = 0; i < kStateSize; ++i) x(static_cast<Eigen::Index>(i), c) = t.state[i];
          adv(c) = t.advantage;
        }
        if (b > 1) {
          const double mean = adv.mean();
          const double sd = std::sqrt((adv.array() - mean).square().sum() / static_cast<double>(b - 1));
          adv = (adv.array() - mean) / (sd + 1e-8);
        }

        const auto actor_acts = forward_batch(policy.actor, x);
        const auto critic_acts = forward_batch(policy.critic, x);
        Matrix d_logits = Matrix::Zero(static_cast<Eigen::Index>(kNumActions), b);
        Matrix d_value(1, b);
        double loss = 0.0;
        const double inv_b = 1.0 / static_cast<double>(b);
        for (Eigen::Index c = 0; c < b; ++c) {
          const Transition& t = batch[order[start + static_cast<std::size_t>(c)]];
          const auto& z = actor_acts.back().col(c);
          double top = -std::numeric_limits<double>::infinity();
          for (std::size_t a = 0; a < kNumActions; ++a) {
            if (t.mask[a]) top = std::max(top, z(static_cast<Eigen::Index>(a)));
          }
          std::array<double, kNumActions> pi{};
          double total = 0.0;
          for (std::size_t a = 0; a < kNumActions; ++a) {
            if (t.mask[a]) total += pi[a] = std::exp(z(static_cast<Eigen::Index>(a)) - top);
          }
          double entropy = 0.0;
          for (std::size_t a = 0; a < kNumActions; ++a) {
            if (!t.mask[a]) continue;
            pi[a] /= total;
            if (pi[a] > 0.0) entropy -= pi[a] * std::log(pi[a]);
          }
          const double log_p = std::log(std::max(pi[t.action], 1e-300));
          const double ratio = std::exp(log_p - t.log_prob);
          const double a_hat = adv(c);
          const double clipped = std::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip);
          loss -= std::min(ratio * a_hat, clipped * a_hat) * inv_b;
          loss -= config.entropy_coef * entropy * inv_b;
          const bool active = ratio * a_hat <= clipped * a_hat;
          const double d_logp = active ? -a_hat * ratio * inv_b : 0.0;
          for (std::size_t a = 0; a < kNumActions; ++a) {
            if (!t.mask[a]) continue;
            const double indicator = a == t.action ? 1.0 : 0.0;
            double g = d_logp * (indicator - pi[a]);
            if (pi[a] > 0.0) g += config.entropy_coef * inv_b * pi[a] * (std::log(pi[a]) + entropy);
            d_logits(static_cast<Eigen::Index>(a), c) = g;
          }
          const double v = critic_acts.back()(0, c);
          loss += config.value_coef * (v - t.ret) * (v - t.ret) * inv_b;
          d_value(0, c) = 2.0 * config.value_coef * (v - t.ret) * inv_b;
        }

        Mlp actor_grad = zeros_like(policy.actor);
        Mlp critic_grad = zeros_like(policy.critic);
        backward_batch(policy.actor, actor_acts, d_logits, actor_grad);
        backward_batch(policy.critic, critic_acts, d_value, critic_grad);
        auto ga = flatten(actor_grad);
        auto gc = flatten(critic_grad);
        double norm2 = 0.0;
        for (double g : ga) norm2 += g * g;
        for (double g : gc) norm2 += g * g;
        if (!std::isfinite(loss) || !std::isfinite(norm2)) {
          diverged = true;
          break;
        }
        const double norm = std::sqrt(norm2);
        if (norm > config.max_grad_norm) {
          const double s = config.max_grad_norm / norm;
          for (double& g : ga) g *= s;
          for (double& g : gc) g *= s;
        }
        actor_opt.step(param_pointers(policy.actor), ga, config.learning_rate);
        critic_opt.step(param_pointers(policy.critic), gc, config.learning_rate);
      }
    }
    for (const Mlp* net : {&policy.actor, &policy.critic}) {
      for (const auto& l : net->layers) {
        if (!std::all_of(l.weights.begin(), l.weights.end(), [](double w) { return std::isfinite(w); })) diverged = true;
      }
    }
    if (diverged) {
      report.diverged = true;
      report.message = "loss or gradient became non-finite at update " + std::to_string(report.updates + 1) +
                       "; keeping the last valid policy";
      policy = last_valid;
      break;
    }
    ++report.updates;
    last_valid = policy;
    if (!checkpoint.empty()) save_policy(policy, checkpoint);
  }
  if (report.diverged && !checkpoint.empty()) save_policy(policy, checkpoint);
  report.policy = std::move(policy);
  return report;
}

}  // namespace coxam
