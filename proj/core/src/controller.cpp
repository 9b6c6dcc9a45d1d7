#include "coxam/controller.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "coxam/ddm.hpp"

namespace coxam {
namespace {

constexpr std::size_t kPlanningDraws = 16;
using DrawMatrix = std::array<Instance, kPlanningDraws>;

// Fixed standard-normal draws for belief expectations, so plans are deterministic given state.
const DrawMatrix& planning_draws() {
  static const DrawMatrix draws = [] {
    DrawMatrix d{};
    std::mt19937_64 gen(0x5eedULL);
    const auto uniform = [&gen] { return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53; };
    for (auto& row : d) {
      for (std::size_t r = 0; r < kNumAttributes; r += 2) {
        const double radius = std::sqrt(-2.0 * std::log(uniform()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        row[r] = radius * std::cos(angle);
        if (r + 1 < kNumAttributes) row[r + 1] = radius * std::sin(angle);
      }
    }
    return d;
  }();
  return draws;
}

std::array<Action, kNumActions> build_catalog() {
  std::array<Action, kNumActions> out{};
  std::size_t i = 0;
  const auto add = [&](Action a) {
    a.index = i;
    out[i++] = a;
  };
  for (const Strategy s : {Strategy::kApproximateCalculation, Strategy::kFeatureAttribution}) {
    for (const double a : kEffortGrid) {
      for (const int k : kSubsetSizes) add({0, s, a, k, 0});
    }
  }
  for (const double a : kEffortGrid) add({0, Strategy::kAtaTraversal, a, 0, 0});
  add({0, Strategy::kInverseCalculation, 0.0, 0, 0});
  add({0, Strategy::kInverseFeatureAttribution, 0.0, 0, 0});
  for (const int d : kDepthPreferences) add({0, Strategy::kNodeThresholdCrossing, 0.0, 0, d});
  add({0, Strategy::kAvailabilityHeuristic, 0.0, 0, 0});
  if (i != kNumActions) throw Error(ErrorCode::kInvariant, "action catalog size mismatch");
  return out;
}

double forward_choice(double evidence, double effort, const CognitiveParams& params, double* exec) {
  const DdmParams ddm{effort, params.nu};
  const ChoiceOutcome c = ddm_choice(evidence, ddm);
  if (exec) *exec = c.execution_time;
  return apply_lapse(c.p_positive, params.lapse);
}

// Noise-free recall of the tree, memoized per cue so a plan evaluates many instances cheaply.
class TreeRecallMemo {
 public:
  struct Walk {
    std::vector<CrossingNode> nodes;
    std::optional<Label> leaf;
    double probability = 0.0;
    int n_reads = 0;
  };

  explicit TreeRecallMemo(const TrialContext& ctx) : ctx_(ctx) {}

  Walk walk(const Instance& raw_x, int max_nodes = 8) {
    const Instance x = displayed(raw_x);
    Walk w;
    w.probability = 1.0;
    int id = 0;
    for (int step = 0; step < max_nodes; ++step) {
      const Identity& ident = identity(id);
      ++w.n_reads;
      w.probability *= ident.probability;
      if (!ident.known) break;
      if (ident.leaf) {
        w.leaf = ident.label;
        return w;
      }
      if (!ident.attribute) break;
      ++w.n_reads;
      const Recalled& thr = threshold(id, *ident.attribute);
      ++w.n_reads;
      w.probability *= thr.probability;
      if (!thr.known) break;
      const Branch b = branch_for(x[*ident.attribute], thr.value);
      const Recalled& child = this->child(id, b);
      ++w.n_reads;
      w.probability *= child.probability;
      if (!child.known) break;
      w.nodes.push_back({*ident.attribute, thr.value});
      id = static_cast<int>(child.value);
    }
    w.leaf.reset();
    w.probability = 0.0;
    return w;
  }

 private:
  struct Identity {
    bool known = false;
    bool leaf = false;
    Label label = Label::Positive;
    std::optional<std::size_t> attribute;
    double probability = 0.0;
  };
  struct Recalled {
    bool known = false;
    double value = 0.0;
    double probability = 0.0;
  };

  const Identity& identity(int id) {
    const auto it = identities_.find(id);
    if (it != identities_.end()) return it->second;
    Identity out;
    const Cue cue{{ChunkType::kNodeAttribute, ChunkType::kLeafLabel},
                  {{slot::kNodeId, static_cast<double>(id)}}};
    const auto f = forecast_retrieval(*ctx_.memory, cue, ctx_.retrieval);
    if (f.chunk) {
      const Chunk& c = ctx_.memory->chunk(*f.chunk);
      out.known = true;
      out.probability = f.probability;
      if (c.type == ChunkType::kLeafLabel) {
        out.leaf = true;
        out.label = label_from_sign(slot_number(c, slot::kLabel));
      } else {
        out.attribute = ctx_.task->attribute_index(slot_text(c, slot::kAttribute));
      }
    }
    return identities_.emplace(id, out).first->second;
  }

  const Recalled& threshold(int id, std::size_t attribute) {
    const auto key = std::make_pair(id, static_cast<int>(attribute));
    const auto it = thresholds_.find(key);
    if (it != thresholds_.end()) return it->second;
    const Cue cue{{ChunkType::kNodeThreshold},
                  {{slot::kNodeId, static_cast<double>(id)},
                   {slot::kAttribute, ctx_.attributes()[attribute].name}}};
    return thresholds_.emplace(key, recall(cue, slot::kThreshold)).first->second;
  }

  const Recalled& child(int id, Branch b) {
    const auto key = std::make_pair(id, b == Branch::kLeft ? 0 : 1);
    const auto it = children_.find(key);
    if (it != children_.end()) return it->second;
    const Cue cue{{ChunkType::kNodeChild},
                  {{slot::kNodeId, static_cast<double>(id)},
                   {slot::kBranch, std::string(b == Branch::kLeft ? "Left" : "Right")}}};
    return children_.emplace(key, recall(cue, slot::kChildNodeId)).first->second;
  }

  Recalled recall(const Cue& cue, const char* slot_name) {
    Recalled out;
    const auto f = forecast_retrieval(*ctx_.memory, cue, ctx_.retrieval);
    if (f.chunk) {
      out.known = true;
      out.value = slot_number(ctx_.memory->chunk(*f.chunk), slot_name);
      out.probability = f.probability;
    }
    return out;
  }

  const TrialContext& ctx_;
  std::map<int, Identity> identities_;
  std::map<std::pair<int, int>, Recalled> thresholds_;
  std::map<std::pair<int, int>, Recalled> children_;
};

Label belief_label(const TrialContext& ctx, const Instance& x) {
  if (!ctx.beliefs) return Label::Positive;
  const Instance z = centered(ctx.attributes(), displayed(x));
  double s = 0.0;
  for (std::size_t r = 0; r < kNumAttributes; ++r) s += ctx.beliefs->mu[r] * z[r];
  return label_from_sign(s);
}

// Internal labeller sharing one recall memo across every instance of a plan.
class InternalModel {
 public:
  InternalModel(const TrialContext& ctx, XaiCondition condition, TreeRecallMemo& memo)
      : ctx_(ctx), condition_(condition), memo_(memo) {}

  Label operator()(const Instance& x) const {
    if (const WeightModel* w = ctx_.visible_weights()) return w->predict(displayed(x));
    if (const RuleTree* t = ctx_.visible_tree()) return t->predict(displayed(x));
    if (has_rules(condition_) && ctx_.task->tree) {
      const auto walk = memo_.walk(x);
      if (walk.leaf) return *walk.leaf;
    }
    return belief_label(ctx_, x);
  }

 private:
  const TrialContext& ctx_;
  XaiCondition condition_;
  TreeRecallMemo& memo_;
};

double flip_mass(const std::vector<WeightedEdit>& edits, const Instance& x, const InternalModel& model,
                 Label original) {
  double total = 0.0;
  double flipped = 0.0;
  for (const auto& w : edits) {
    total += w.probability;
    if (model(w.edit.apply(x)) != original) flipped += w.probability;
  }
  return total > 0.0 ? flipped / total : 0.0;
}

double belief_positive(const TrialContext& ctx, const Instance& x) {
  if (!ctx.beliefs) return 0.5;
  const Instance z = centered(ctx.attributes(), displayed(x));
  double mean = 0.0;
  double var = 0.0;
  for (std::size_t r = 0; r < kNumAttributes; ++r) {
    mean += ctx.beliefs->mu[r] * z[r];
    var += ctx.beliefs->sigma[r] * ctx.beliefs->sigma[r] * z[r] * z[r];
  }
  if (var <= 0.0) return mean > 0.0 ? 1.0 : (mean < 0.0 ? 0.0 : 0.5);
  return normal_cdf(mean / std::sqrt(var));
}

double subjective_positive(const TrialContext& ctx, XaiCondition condition, TreeRecallMemo& memo,
                           const Instance& x) {
  if (const WeightModel* w = ctx.visible_weights()) return w->predict(displayed(x)) == Label::Positive ? 1.0 : 0.0;
  if (const RuleTree* t = ctx.visible_tree()) return t->predict(displayed(x)) == Label::Positive ? 1.0 : 0.0;
  const double q_beliefs = belief_positive(ctx, x);
  if (has_rules(condition) && ctx.task->tree) {
    const auto walk = memo.walk(x);
    if (walk.leaf) {
      const double leaf = *walk.leaf == Label::Positive ? 1.0 : 0.0;
      return walk.probability * leaf + (1.0 - walk.probability) * q_beliefs;
    }
  }
  return q_beliefs;
}

struct ForwardPlanner {
  const DecisionPoint& point;
  const TrialContext& ctx;
  TreeRecallMemo& memo;
  Instance x;
  Instance z;
  double q;

  ForwardPlanner(const DecisionPoint& p, TreeRecallMemo& m)
      : point(p),
        ctx(*p.ctx),
        memo(m),
        x(displayed(p.ctx->instance)),
        z(centered(p.ctx->attributes(), x)),
        q(subjective_positive(*p.ctx, p.condition, m, p.ctx->instance)) {}

  double agree(double p_positive) const { return planning_agreement(p_positive, q); }

  ValueEstimate approximate(const Action& a) const {
    const auto subset = ranked_subset(ctx, a.subset_size);
    const CognitiveParams& params = point.params;
    if (const WeightModel* w = ctx.visible_weights()) {
      double num = w->intercept;
      double den = std::abs(w->intercept);
      for (const auto i : subset) {
        num += w->factors[i] * x[i];
        den += std::abs(w->factors[i] * x[i]);
      }
      const double e = den > 0.0 ? num / den : 0.0;
      double exec = 0.0;
      const double p = forward_choice(e, a.effort, params, &exec);
      const int k = static_cast<int>(subset.size());
      return make_value(agree(p), total_time(exec, 2 * k, k + 1), params.gamma);
    }
    // Hidden: each recalled term enters with its recall probability.
    const auto recall = [&](const std::string& attribute) {
      const Cue cue{{ChunkType::kFactor}, {{slot::kAttribute, attribute}}};
      const auto f = forecast_retrieval(*ctx.memory, cue, ctx.retrieval);
      double factor = 0.0;
      if (f.chunk) factor = slot_number(ctx.memory->chunk(*f.chunk), slot::kFactor);
      return std::make_pair(factor, f.chunk ? f.probability : 0.0);
    };
    const auto [b, pb] = recall(kInterceptAttribute);
    double num = pb * b;
    double den = pb * std::abs(b);
    double p_none = 1.0;
    double reads = 0.0;
    double calcs = 1.0;
    for (const auto i : subset) {
      const auto [f, pi] = recall(ctx.attributes()[i].name);
      num += pi * f * x[i];
      den += pi * std::abs(f * x[i]);
      p_none *= 1.0 - pi;
      reads += 1.0 + pi;
      calcs += pi;
    }
    const double e = den > 0.0 ? num / den : 0.0;
    double exec = 0.0;
    const double p = forward_choice(e, a.effort, params, &exec);
    const double u = (1.0 - p_none) * agree(p) + p_none * 0.5;
    const double t = (1.0 - p_none) * exec + reads * kSecondsPerRead + calcs * kSecondsPerCalculation;
    return make_value(u, t, params.gamma);
  }

  ValueEstimate feature(const Action& a) const {
    const auto subset = ranked_subset(ctx, a.subset_size);
    const CognitiveParams& params = point.params;
    double u = 0.0;
    double exec_sum = 0.0;
    for (const auto& draw : planning_draws()) {
      double num = 0.0;
      double den = 0.0;
      for (const auto i : subset) {
        const double omega = ctx.beliefs->mu[i] + ctx.beliefs->sigma[i] * draw[i];
        num += omega * z[i];
        den += std::abs(omega * z[i]);
      }
      const double e = den > 0.0 ? num / den : 0.0;
      double exec = 0.0;
      u += agree(forward_choice(e, a.effort, params, &exec));
      exec_sum += exec;
    }
    const double n = static_cast<double>(kPlanningDraws);
    return make_value(u / n, total_time(exec_sum / n, static_cast<int>(subset.size()), 0), params.gamma);
  }

  ValueEstimate traversal(const Action& a) const {
    const CognitiveParams& params = point.params;
    const auto evidence_of = [&](const std::vector<CrossingNode>& nodes, Label leaf) {
      double d = 0.0;
      for (const auto& n : nodes) {
        const auto& spec = ctx.attributes()[n.attribute];
        d += std::abs(spec.unit(x[n.attribute]) - spec.unit(n.threshold));
      }
      return to_int(leaf) * d;
    };
    if (const RuleTree* tree = ctx.visible_tree()) {
      std::vector<CrossingNode> nodes;
      const auto path = tree->path(x);
      for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const auto& n = tree->node(path[k]);
        nodes.push_back({n.attribute, n.threshold});
      }
      double exec = 0.0;
      const double p = forward_choice(evidence_of(nodes, tree->predict(x)), a.effort, params, &exec);
      const int k = static_cast<int>(nodes.size());
      return make_value(agree(p), total_time(exec, 2 * k, k > 0 ? 1 : 0), params.gamma);
    }
    const auto walk = memo.walk(x);
    if (!walk.leaf) {
      return make_value(0.5, walk.n_reads * kSecondsPerRead, params.gamma);
    }
    double exec = 0.0;
    const double p = forward_choice(evidence_of(walk.nodes, *walk.leaf), a.effort, params, &exec);
    const double pi = walk.probability;
    const double u = pi * agree(p) + (1.0 - pi) * 0.5;
    const double t = pi * (exec + kSecondsPerCalculation) + walk.n_reads * kSecondsPerRead;
    return make_value(u, t, params.gamma);
  }
};

struct CounterfactualPlanner {
  const DecisionPoint& point;
  const TrialContext& ctx;
  TreeRecallMemo& memo;
  InternalModel model;
  Instance x;
  Label original;

  CounterfactualPlanner(const DecisionPoint& p, TreeRecallMemo& m)
      : point(p),
        ctx(*p.ctx),
        memo(m),
        model(*p.ctx, p.condition, m),
        x(displayed(p.ctx->instance)),
        original(model(x)) {}

  MarginParams margin() const { return {point.params.epsilon}; }

  ValueEstimate inverse() const {
    const WeightModel& w = *ctx.visible_weights();
    const auto edits = inverse_weight_edits(ctx.attributes(), x, w, margin());
    const int reads = 2 * static_cast<int>(w.nonzero_count());
    return make_value(flip_mass(edits, x, model, original), total_time(0.0, reads, edits.empty() ? 0 : 2),
                      point.params.gamma);
  }

  ValueEstimate inverse_beliefs() const {
    double u = 0.0;
    for (const auto& draw : planning_draws()) {
      Instance omega{};
      for (std::size_t r = 0; r < kNumAttributes; ++r) {
        omega[r] = ctx.beliefs->mu[r] + ctx.beliefs->sigma[r] * draw[r];
      }
      u += flip_mass(inverse_belief_edits(ctx.attributes(), x, omega, margin(), opposite(original)), x, model, original);
    }
    return make_value(u / static_cast<double>(kPlanningDraws),
                      total_time(0.0, static_cast<int>(kNumAttributes), 1), point.params.gamma);
  }

  ValueEstimate crossing(const Action& a) const {
    std::vector<CrossingNode> nodes;
    double pi = 1.0;
    int reads = 0;
    if (const RuleTree* tree = ctx.visible_tree()) {
      const auto path = tree->path(x);
      for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const auto& n = tree->node(path[k]);
        nodes.push_back({n.attribute, n.threshold});
      }
      reads = 2 * static_cast<int>(nodes.size());
    } else {
      const auto walk = memo.walk(x);
      nodes = walk.nodes;
      pi = walk.probability;
      reads = walk.n_reads;
    }
    const auto edits = crossing_edits(ctx.attributes(), x, nodes, a.depth, point.params.depth_sd, margin());
    return make_value(pi * flip_mass(edits, x, model, original), total_time(0.0, reads, 1), point.params.gamma);
  }

  ValueEstimate availability() const {
    const auto& attrs = ctx.attributes();
    const Label target = opposite(original);
    const Cue cue{{ChunkType::kAvailability}, {{slot::kTargetClass, static_cast<double>(to_int(target))}}};
    const auto f = forecast_retrieval(*ctx.memory, cue, ctx.retrieval);
    double replay = 0.0;
    double pi = 0.0;
    if (f.chunk) {
      const Chunk& c = ctx.memory->chunk(*f.chunk);
      const auto attribute = static_cast<std::size_t>(slot_number(c, slot::kAttribute));
      const Edit e = make_edit(attrs, x, attribute, slot_number(c, slot::kDelta));
      replay = model(e.apply(x)) != original ? 1.0 : 0.0;
      pi = f.probability;
    }
    constexpr std::array<double, 5> kQuantiles{0.1, 0.3, 0.5, 0.7, 0.9};
    double cold = 0.0;
    for (std::size_t r = 0; r < kNumAttributes; ++r) {
      for (const double q : kQuantiles) {
        Instance edited = x;
        edited[r] = attrs[r].min + q * attrs[r].range();
        if (model(edited) != original) cold += 1.0;
      }
    }
    cold /= static_cast<double>(kNumAttributes * kQuantiles.size());
    return make_value(pi * replay + (1.0 - pi) * cold, total_time(0.0, 1, 0), point.params.gamma);
  }
};

}  // namespace

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kApproximateCalculation: return "approximate_calculation";
    case Strategy::kFeatureAttribution: return "feature_attribution";
    case Strategy::kAtaTraversal: return "ata_traversal";
    case Strategy::kInverseCalculation: return "inverse_calculation";
    case Strategy::kInverseFeatureAttribution: return "inverse_feature_attribution";
    case Strategy::kNodeThresholdCrossing: return "node_threshold_crossing";
    case Strategy::kAvailabilityHeuristic: return "availability_heuristic";
  }
  return "feature_attribution";
}

Strategy parse_strategy(std::string_view name) {
  for (std::size_t i = 0; i < kNumStrategies; ++i) {
    const auto s = static_cast<Strategy>(i);
    if (strategy_name(s) == name) return s;
  }
  throw Error(ErrorCode::kValidation, "unknown strategy '" + std::string(name) + "'");
}

const std::array<Action, kNumActions>& action_catalog() {
  static const std::array<Action, kNumActions> catalog = build_catalog();
  return catalog;
}

std::vector<std::size_t> ranked_subset(const TrialContext& ctx, int k) {
  if (k < 1) throw Error(ErrorCode::kPrecondition, "subset size must be positive");
  Instance score{};
  if (const WeightModel* w = ctx.visible_weights()) {
    for (std::size_t i = 0; i < kNumAttributes; ++i) score[i] = std::abs(w->factors[i]);
  } else if (ctx.beliefs) {
    for (std::size_t i = 0; i < kNumAttributes; ++i) score[i] = std::abs(ctx.beliefs->mu[i]);
  }
  std::vector<std::size_t> order(kNumAttributes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  order.resize(std::min<std::size_t>(static_cast<std::size_t>(k), kNumAttributes));
  return order;
}

ActionMask feasible_actions(const TrialContext& ctx, Phase phase, XaiCondition condition) {
  ActionMask mask{};
  const bool visible = ctx.xai_visible();
  const bool weights_usable = visible ? ctx.visible_weights() != nullptr : has_weights(condition);
  const bool rules_usable = visible ? ctx.visible_tree() != nullptr : has_rules(condition);
  const int nonzero = ctx.task->weights ? static_cast<int>(ctx.task->weights->nonzero_count()) : 0;
  const int tree_depth = ctx.task->tree ? ctx.task->tree->depth : 0;
  for (const auto& a : action_catalog()) {
    bool ok = false;
    switch (a.strategy) {
      case Strategy::kApproximateCalculation:
        ok = phase == Phase::kForward && weights_usable && ctx.task->weights &&
             a.subset_size <= std::max(nonzero, 1);
        break;
      case Strategy::kFeatureAttribution: ok = phase == Phase::kForward; break;
      case Strategy::kAtaTraversal: ok = phase == Phase::kForward && rules_usable && ctx.task->tree; break;
      case Strategy::kInverseCalculation:
        ok = phase == Phase::kCounterfactual && ctx.visible_weights() != nullptr;
        break;
      case Strategy::kInverseFeatureAttribution: ok = phase == Phase::kCounterfactual; break;
      case Strategy::kNodeThresholdCrossing:
        ok = phase == Phase::kCounterfactual && rules_usable && ctx.task->tree && a.depth < tree_depth;
        break;
      case Strategy::kAvailabilityHeuristic: ok = phase == Phase::kCounterfactual; break;
    }
    mask[a.index] = ok;
  }
  return mask;
}

ValueEstimate make_value(double utility, double expected_time, double gamma) {
  return {utility, expected_time, utility - gamma * expected_time};
}

double forward_utility(double p_positive, Label ai_label) {
  return ai_label == Label::Positive ? p_positive : 1.0 - p_positive;
}

double planning_forward_utility(double p_positive) { return std::max(p_positive, 1.0 - p_positive); }

double planning_agreement(double p_positive, double q_positive) {
  return q_positive * p_positive + (1.0 - q_positive) * (1.0 - p_positive);
}

double subjective_positive(const TrialContext& ctx, XaiCondition condition, const Instance& x) {
  TreeRecallMemo memo(ctx);
  return subjective_positive(ctx, condition, memo, x);
}

double counterfactual_utility(const EditDistribution& dist, const Instance& x, const Classifier& model,
                              Label original) {
  double u = 0.0;
  for (const auto& w : dist.edits) {
    if (model(w.edit.apply(x)) != original) u += w.probability;
  }
  return u;
}

Label internal_label(const TrialContext& ctx, XaiCondition condition, const Instance& x) {
  TreeRecallMemo memo(ctx);
  return InternalModel(ctx, condition, memo)(x);
}

void EpisodeStats::record(Strategy s, double time, double success) {
  auto& st = strategies[static_cast<std::size_t>(s)];
  ++st.uses;
  st.total_time += time;
  st.successes += success;
  ++trials;
}

void EpisodeStats::record_partial_sums(const std::array<std::optional<double>, kNumAttributes>& sums) {
  for (std::size_t r = 0; r < kNumAttributes; ++r) {
    if (!sums[r]) continue;
    partial_sum_total[r] += *sums[r];
    ++partial_sum_count[r];
  }
}

StateVector state_features(const DecisionPoint& point) {
  StateVector s{};
  const auto& p = point.params;
  const TrialContext& ctx = *point.ctx;
  const bool forward = point.phase == Phase::kForward;
  std::size_t i = 0;
  s[i++] = std::clamp(p.kappa, -5.0, 5.0);
  s[i++] = 10.0 * p.gamma;
  s[i++] = forward ? p.nu : 10.0 * p.epsilon;
  s[i++] = forward ? 0.0 : 1.0;
  s[i++] = ctx.xai_visible() ? 1.0 : 0.0;
  s[i++] = ctx.visible_weights() ? 1.0 : 0.0;
  s[i++] = ctx.visible_tree() ? 1.0 : 0.0;
  s[i++] = has_weights(point.condition) ? 1.0 : 0.0;
  s[i++] = has_rules(point.condition) ? 1.0 : 0.0;
  s[i++] = point.trials_per_phase > 0 ? static_cast<double>(point.trial_in_phase) / point.trials_per_phase : 0.0;
  for (std::size_t k = 0; k < kNumStrategies; ++k) {
    const auto& st = point.stats ? point.stats->strategies[k] : EpisodeStats::PerStrategy{};
    s[i++] = st.uses > 0 ? st.total_time / st.uses / 30.0 : 0.0;
    s[i++] = st.uses > 0 ? st.successes / st.uses : 0.0;
    s[i++] = st.uses / 40.0;
  }
  for (std::size_t r = 0; r < kNumAttributes; ++r) {
    const int n = point.stats ? point.stats->partial_sum_count[r] : 0;
    s[i++] = n > 0 ? std::clamp(point.stats->partial_sum_total[r] / n, -10.0, 10.0) : 0.0;
  }
  return s;
}

std::array<std::optional<ValueEstimate>, kNumActions> plan_values(const DecisionPoint& point) {
  std::array<std::optional<ValueEstimate>, kNumActions> out{};
  TreeRecallMemo memo(*point.ctx);
  if (point.phase == Phase::kForward) {
    const ForwardPlanner planner(point, memo);
    for (const auto& a : action_catalog()) {
      if (!point.mask[a.index]) continue;
      switch (a.strategy) {
        case Strategy::kApproximateCalculation: out[a.index] = planner.approximate(a); break;
        case Strategy::kFeatureAttribution: out[a.index] = planner.feature(a); break;
        case Strategy::kAtaTraversal: out[a.index] = planner.traversal(a); break;
        default: break;
      }
    }
    return out;
  }
  const CounterfactualPlanner planner(point, memo);
  for (const auto& a : action_catalog()) {
    if (!point.mask[a.index]) continue;
    switch (a.strategy) {
      case Strategy::kInverseCalculation: out[a.index] = planner.inverse(); break;
      case Strategy::kInverseFeatureAttribution: out[a.index] = planner.inverse_beliefs(); break;
      case Strategy::kNodeThresholdCrossing: out[a.index] = planner.crossing(a); break;
      case Strategy::kAvailabilityHeuristic: out[a.index] = planner.availability(); break;
      default: break;
    }
  }
  return out;
}

std::size_t argmax_value(const std::array<std::optional<ValueEstimate>, kNumActions>& values) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < kNumActions; ++i) {
    if (!values[i]) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = *values[*best];
    const auto& c = *values[i];
    if (c.value > b.value || (c.value == b.value && c.expected_time < b.expected_time)) best = i;
  }
  if (!best) throw Error(ErrorCode::kState, "no feasible action");
  return *best;
}

std::size_t MyopicController::select(const DecisionPoint& point, Rng&) {
  return argmax_value(plan_values(point));
}

RestrictedController::RestrictedController(Controller& inner, std::vector<Strategy> allowed)
    : inner_(inner), allowed_(std::move(allowed)) {
  if (allowed_.empty()) throw Error(ErrorCode::kConfig, "a restricted controller needs at least one strategy");
}

std::size_t RestrictedController::select(const DecisionPoint& point, Rng& rng) {
  DecisionPoint restricted = point;
  bool any = false;
  for (const auto& a : action_catalog()) {
    const bool keep = std::find(allowed_.begin(), allowed_.end(), a.strategy) != allowed_.end();
    restricted.mask[a.index] = point.mask[a.index] && keep;
    any = any || restricted.mask[a.index];
  }
  return inner_.select(any ? restricted : point, rng);
}

}  // namespace coxam
