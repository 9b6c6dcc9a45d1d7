#include "coxam/counterfactual.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coxam/ddm.hpp"
#include "coxam/tree_recall.hpp"

namespace coxam {

Instance Edit::apply(const Instance& x) const {
  Instance out = x;
  out[attribute] = new_value;
  return out;
}

Edit make_edit(const AttributeSpecs& specs, const Instance& x, std::size_t attribute, double delta) {
  if (attribute >= kNumAttributes) throw Error(ErrorCode::kPrecondition, "attribute index out of range");
  Edit e;
  e.attribute = attribute;
  e.old_value = x[attribute];
  const double target = x[attribute] + delta;
  e.new_value = specs[attribute].clamp(target);
  e.clamped = e.new_value != target || !std::isfinite(target);
  e.delta = e.new_value - e.old_value;
  return e;
}

void EditDistribution::normalize() {
  double total = 0.0;
  for (const auto& w : edits) total += w.probability;
  if (!(total > 0.0)) throw Error(ErrorCode::kInvariant, "edit distribution has no mass");
  for (auto& w : edits) w.probability /= total;
}

const Edit& EditDistribution::sample(Rng& rng) const {
  if (edits.empty()) throw Error(ErrorCode::kPrecondition, "cannot sample an empty edit distribution");
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (const auto& w : edits) {
    acc += w.probability;
    if (u < acc) return w.edit;
  }
  return edits.back().edit;
}

Instance EditDistribution::attribute_probabilities() const {
  Instance p{};
  for (const auto& w : edits) p[w.edit.attribute] += w.probability;
  return p;
}

double EditDistribution::time_cost() const { return total_time(0.0, n_reads, n_calcs); }

double inverse_edit_delta(double score, double factor, double margin) {
  if (factor == 0.0) throw Error(ErrorCode::kPrecondition, "zero factor cannot be inverted");
  const double direction = sign_or_positive(score) * (factor > 0.0 ? 1.0 : -1.0);
  return -score / factor - direction * margin;
}

double threshold_crossing_delta(double value, double threshold, double margin) {
  const double target = branch_for(value, threshold) == Branch::kLeft ? threshold + margin : threshold - margin;
  return target - value;
}

std::vector<double> depth_weights(int n_depths, double preferred, double sd) {
  std::vector<double> w(static_cast<std::size_t>(std::max(n_depths, 0)), 0.0);
  if (w.empty()) return w;
  if (!(sd > 0.0)) {
    const double clamped = std::clamp(preferred, 0.0, static_cast<double>(n_depths - 1));
    w[static_cast<std::size_t>(std::lround(clamped))] = 1.0;
    return w;
  }
  double total = 0.0;
  for (int k = 0; k < n_depths; ++k) {
    w[static_cast<std::size_t>(k)] = normal_pdf((k - preferred) / sd);
    total += w[static_cast<std::size_t>(k)];
  }
  if (!(total > 0.0)) return depth_weights(n_depths, preferred, 0.0);
  for (auto& v : w) v /= total;
  return w;
}

std::vector<WeightedEdit> inverse_weight_edits(const AttributeSpecs& specs, const Instance& x,
                                               const WeightModel& weights, const MarginParams& margin) {
  std::vector<WeightedEdit> out;
  const double score = weights.score(x);
  for (std::size_t r = 0; r < kNumAttributes; ++r) {
    const double w = weights.factors[r];
    if (w == 0.0) continue;
    const double delta = inverse_edit_delta(score, w, margin.epsilon * specs[r].range());
    out.push_back({make_edit(specs, x, r, delta), std::abs(w)});
  }
  return out;
}

std::vector<WeightedEdit> inverse_belief_edits(const AttributeSpecs& specs, const Instance& x,
                                               const Instance& omega, const MarginParams& margin,
                                               std::optional<Label> target) {
  std::vector<WeightedEdit> out;
  const Instance z = centered(specs, x);
  double score = 0.0;
  for (std::size_t r = 0; r < kNumAttributes; ++r) score += omega[r] * z[r];
  for (std::size_t r = 0; r < kNumAttributes; ++r) {
    if (omega[r] == 0.0) continue;
    // The centred scale spans two units per range, so the margin doubles there.
    // When the beliefs already place x on the target side, push further by the margin.
    const bool on_target = target && score != 0.0 && label_from_sign(score) == *target;
    const double dz = on_target ? to_int(*target) * (omega[r] > 0.0 ? 1.0 : -1.0) * 2.0 * margin.epsilon
                                : inverse_edit_delta(score, omega[r], 2.0 * margin.epsilon);
    out.push_back({make_edit(specs, x, r, dz * specs[r].range() / 2.0), std::abs(omega[r])});
  }
  return out;
}

std::vector<WeightedEdit> crossing_edits(const AttributeSpecs& specs, const Instance& x,
                                         const std::vector<CrossingNode>& trace, double depth_preference,
                                         double depth_sd, const MarginParams& margin) {
  std::vector<WeightedEdit> out;
  const auto weights = depth_weights(static_cast<int>(trace.size()), depth_preference, depth_sd);
  for (std::size_t k = 0; k < trace.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    const auto& n = trace[k];
    const double delta =
        threshold_crossing_delta(x[n.attribute], n.threshold, margin.epsilon * specs[n.attribute].range());
    out.push_back({make_edit(specs, x, n.attribute, delta), weights[k]});
  }
  return out;
}

EditDistribution inverse_calculation(const TrialContext& ctx, const MarginParams& margin) {
  const WeightModel* w = ctx.visible_weights();
  if (!w) throw Error(ErrorCode::kUnavailable, "inverse calculation needs the weights explanation");
  EditDistribution out;
  MemoryStore& memory = *ctx.memory;
  const auto& attrs = ctx.attributes();
  const Instance x = displayed(ctx.instance);
  memory.encode(ChunkType::kFactor, factor_chunk(kInterceptAttribute, w->intercept));
  for (std::size_t r = 0; r < kNumAttributes; ++r) {
    if (w->factors[r] == 0.0) continue;
    memory.advance(2.0 * kSecondsPerRead);
    out.n_reads += 2;
    memory.encode(ChunkType::kFactor, factor_chunk(attrs[r].name, w->factors[r]));
  }
  out.trace.push_back({TraceStep::Kind::kCalculate, "score", w->score(x), std::nullopt});
  out.edits = inverse_weight_edits(attrs, x, *w, margin);
  if (out.edits.empty()) return out;
  out.n_calcs = 2;
  memory.advance(out.n_calcs * kSecondsPerCalculation);
  out.normalize();
  return out;
}

EditDistribution inverse_feature_attribution(const TrialContext& ctx, const MarginParams& margin,
                                             Rng& rng, std::optional<Label> target) {
  if (!ctx.beliefs) throw Error(ErrorCode::kPrecondition, "inverse feature attribution needs beliefs");
  EditDistribution out;
  MemoryStore& memory = *ctx.memory;
  const auto& attrs = ctx.attributes();
  const Instance x = displayed(ctx.instance);
  std::normal_distribution<double> normal(0.0, 1.0);
  Instance omega{};
  for (std::size_t r = 0; r < kNumAttributes; ++r) {
    omega[r] = ctx.beliefs->mu[r] + ctx.beliefs->sigma[r] * normal(rng);
    out.trace.push_back({TraceStep::Kind::kSample, "belief " + attrs[r].name, omega[r], std::nullopt});
    if (ctx.beliefs->persisted) memory.touch(ctx.beliefs->chunks[r]);
  }
  memory.advance(kNumAttributes * kSecondsPerRead);
  out.n_reads = static_cast<int>(kNumAttributes);
  out.edits = inverse_belief_edits(attrs, x, omega, margin, target);
  if (out.edits.empty()) return out;
  out.n_calcs = 1;
  memory.advance(out.n_calcs * kSecondsPerCalculation);
  out.normalize();
  return out;
}

EditDistribution node_threshold_crossing(const TrialContext& ctx, double depth_preference,
                                         double depth_sd, const MarginParams& margin, Rng& rng) {
  if (ctx.xai_visible() && !ctx.visible_tree()) {
    throw Error(ErrorCode::kUnavailable, "threshold crossing needs the rules explanation");
  }
  EditDistribution out;
  const TreeWalk walk = ctx.visible_tree() ? read_tree_walk(*ctx.visible_tree(), ctx)
                                           : recall_tree_walk(ctx, rng);
  out.n_reads = walk.n_reads;
  out.trace = walk.trace;
  if (walk.nodes.empty()) return out;
  std::vector<CrossingNode> nodes;
  for (const auto& n : walk.nodes) nodes.push_back({n.attribute, n.threshold});
  out.edits = crossing_edits(ctx.attributes(), displayed(ctx.instance), nodes, depth_preference, depth_sd, margin);
  out.n_calcs = 1;
  ctx.memory->advance(out.n_calcs * kSecondsPerCalculation);
  out.normalize();
  return out;
}

EditDistribution availability_heuristic(const TrialContext& ctx, Label target, Rng& rng) {
  EditDistribution out;
  MemoryStore& memory = *ctx.memory;
  const auto& attrs = ctx.attributes();
  const Instance x = displayed(ctx.instance);
  const Cue cue{{ChunkType::kAvailability}, {{slot::kTargetClass, static_cast<double>(to_int(target))}}};
  const auto r = retrieve(memory, cue, ctx.retrieval, rng);
  memory.advance(kSecondsPerRead);
  out.n_reads = 1;
  if (r.success()) {
    const Chunk& c = memory.chunk(*r.chunk);
    const auto attribute = static_cast<std::size_t>(slot_number(c, slot::kAttribute));
    const double delta = slot_number(c, slot::kDelta);
    out.trace.push_back({TraceStep::Kind::kRetrieval, "edit " + attrs[attribute].name, delta, std::nullopt});
    out.edits.push_back({make_edit(attrs, x, attribute, delta), 1.0});
    return out;
  }
  out.cold_start = true;
  out.trace.push_back({TraceStep::Kind::kRetrievalFailure, "remembered edit", 0.0, std::nullopt});
  for (std::size_t a = 0; a < kNumAttributes; ++a) {
    const double v = std::uniform_real_distribution<double>(attrs[a].min, attrs[a].max)(rng);
    out.edits.push_back({make_edit(attrs, x, a, v - x[a]), 1.0 / kNumAttributes});
  }
  return out;
}

void record_edit(MemoryStore& memory, Label target, const Edit& edit) {
  memory.encode(ChunkType::kAvailability, availability_chunk(target, edit.attribute, edit.delta));
}

}  // namespace coxam
