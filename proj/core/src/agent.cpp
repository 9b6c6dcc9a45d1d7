#include "coxam/agent.hpp"

#include <cmath>

#include "coxam/tree_recall.hpp"

namespace coxam {
namespace {

void encode_weights(MemoryStore& memory, const WeightModel& w, const AttributeSpecs& attrs) {
  memory.encode(ChunkType::kFactor, factor_chunk(kInterceptAttribute, w.intercept));
  for (std::size_t r = 0; r < kNumAttributes; ++r) {
    if (w.factors[r] != 0.0) memory.encode(ChunkType::kFactor, factor_chunk(attrs[r].name, w.factors[r]));
  }
}

}  // namespace

Agent::Agent(const TaskModels& task, XaiCondition condition, const CognitiveParams& params,
             Controller& controller, std::uint64_t seed)
    : task_(&task), condition_(condition), params_(params), controller_(&controller), rng_(seed) {
  params_.validate();
  if (has_weights(condition) && !task.weights) {
    throw Error(ErrorCode::kPrecondition, "condition needs a weights explanation");
  }
  if (has_rules(condition) && !task.tree) {
    throw Error(ErrorCode::kPrecondition, "condition needs a rules explanation");
  }
}

void Agent::study() {
  if (studied_) throw Error(ErrorCode::kState, "agent already studied the tutorial");
  if (has_weights(condition_)) encode_weights(memory_, *task_->weights, task_->attributes);
  if (has_rules(condition_)) encode_tree(memory_, *task_->tree, task_->attributes);
  beliefs_ = MentalFactors::initial(has_weights(condition_) ? task_->weights : std::nullopt);
  beliefs_.persist(memory_, task_->attributes);
  studied_ = true;
}

void Agent::begin_trial() {
  if (!studied_) study();
  memory_.advance(kInterTrialInterval);
}

TrialContext Agent::context(const Instance& x, SchemaKind shown) {
  if (shown == SchemaKind::kWeights && !has_weights(condition_)) {
    throw Error(ErrorCode::kPrecondition, "weights shown outside their condition");
  }
  if (shown == SchemaKind::kRules && !has_rules(condition_)) {
    throw Error(ErrorCode::kPrecondition, "rules shown outside their condition");
  }
  TrialContext ctx;
  ctx.task = task_;
  ctx.instance = x;
  ctx.shown = shown;
  ctx.memory = &memory_;
  ctx.beliefs = &beliefs_;
  ctx.retrieval = params_.retrieval();
  ctx.lapse = params_.lapse;
  return ctx;
}

DecisionPoint Agent::decision_point(const TrialContext& ctx, Phase phase, int trial_in_phase) const {
  DecisionPoint point;
  point.ctx = &ctx;
  point.phase = phase;
  point.condition = condition_;
  point.params = params_;
  point.stats = &stats_;
  point.mask = feasible_actions(ctx, phase, condition_);
  point.trial_in_phase = trial_in_phase;
  return point;
}

ForwardDecision Agent::forward_trial(const Instance& x, SchemaKind shown, int trial_in_phase,
                                     std::optional<std::size_t> forced_action) {
  begin_trial();
  const TrialContext ctx = context(x, shown);
  const DecisionPoint point = decision_point(ctx, Phase::kForward, trial_in_phase);
  const std::size_t index = forced_action ? *forced_action : controller_->select(point, rng_);
  if (index >= kNumActions || !point.mask[index]) {
    throw Error(ErrorCode::kState, "controller chose an infeasible forward action");
  }
  ForwardDecision d;
  d.action = action_catalog()[index];
  const DdmParams ddm{d.action.effort, params_.nu};
  switch (d.action.strategy) {
    case Strategy::kApproximateCalculation: {
      const auto subset = ranked_subset(ctx, d.action.subset_size);
      d.result = approximate_calculation(ctx, subset, ddm, rng_);
      break;
    }
    case Strategy::kFeatureAttribution: {
      const auto subset = ranked_subset(ctx, d.action.subset_size);
      d.result = feature_attribution(ctx, subset, ddm, rng_);
      break;
    }
    case Strategy::kAtaTraversal: d.result = ata_traversal(ctx, ddm, rng_); break;
    default: throw Error(ErrorCode::kState, "counterfactual strategy chosen on a forward trial");
  }
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  d.response = u < d.result.p_positive ? Label::Positive : Label::Negative;
  return d;
}

void Agent::forward_feedback(const Instance& x, Label ai_label, SchemaKind shown) {
  const Instance z = centered(task_->attributes, displayed(x));
  const double p = beliefs_.predicted_probability(z);
  update_mental_factors(beliefs_.mu, beliefs_.sigma, z, p, ai_label == Label::Positive ? 1 : 0);
  memory_.advance(kSecondsPerRead);
  beliefs_.persist(memory_, task_->attributes);
  if (shown == SchemaKind::kWeights && task_->weights) {
    encode_weights(memory_, *task_->weights, task_->attributes);
  } else if (shown == SchemaKind::kRules && task_->tree) {
    encode_tree_path(memory_, *task_->tree, task_->attributes, displayed(x));
  }
}

void Agent::record_forward_outcome(const ForwardDecision& d, Label ai_label) {
  stats_.record(d.action.strategy, d.result.total_time, d.response == ai_label ? 1.0 : 0.0);
  stats_.record_partial_sums(d.result.partial_sums);
}

CounterfactualDecision Agent::counterfactual_trial(const Instance& x, SchemaKind shown, int trial_in_phase,
                                                   std::optional<std::size_t> forced_action) {
  begin_trial();
  const TrialContext ctx = context(x, shown);
  const DecisionPoint point = decision_point(ctx, Phase::kCounterfactual, trial_in_phase);
  CounterfactualDecision d;
  d.internal = internal_label(ctx, condition_, x);
  d.target = opposite(d.internal);
  const std::size_t index = forced_action ? *forced_action : controller_->select(point, rng_);
  if (index >= kNumActions || !point.mask[index]) {
    throw Error(ErrorCode::kState, "controller chose an infeasible counterfactual action");
  }
  d.action = action_catalog()[index];
  const MarginParams margin{params_.epsilon};
  switch (d.action.strategy) {
    case Strategy::kInverseCalculation: d.distribution = inverse_calculation(ctx, margin); break;
    case Strategy::kInverseFeatureAttribution:
      d.distribution = inverse_feature_attribution(ctx, margin, rng_, d.target);
      break;
    case Strategy::kNodeThresholdCrossing:
      d.distribution = node_threshold_crossing(ctx, d.action.depth, params_.depth_sd, margin, rng_);
      break;
    case Strategy::kAvailabilityHeuristic: d.distribution = availability_heuristic(ctx, d.target, rng_); break;
    default: throw Error(ErrorCode::kState, "forward strategy chosen on a counterfactual trial");
  }
  d.total_time = d.distribution.time_cost();
  if (d.distribution.empty()) {
    const int reads = d.distribution.n_reads;
    d.distribution = availability_heuristic(ctx, d.target, rng_);
    d.distribution.n_reads += reads;
    d.total_time = d.distribution.time_cost();
    d.fell_back = true;
  }
  d.edit = d.distribution.sample(rng_);
  if (d.edit.delta == 0.0) {
    // An edit must change the value; a boundary value moves to the opposite bound.
    const auto& spec = task_->attributes[d.edit.attribute];
    const double v = displayed(x)[d.edit.attribute];
    d.edit = make_edit(task_->attributes, displayed(x), d.edit.attribute,
                       (v >= spec.max ? spec.min : spec.max) - v);
  }
  return d;
}

void Agent::commit_edit(Label target, const Edit& edit) { record_edit(memory_, target, edit); }

void Agent::record_counterfactual_outcome(const CounterfactualDecision& d, bool internal_success) {
  stats_.record(d.action.strategy, d.total_time, internal_success ? 1.0 : 0.0);
}

}  // namespace coxam
