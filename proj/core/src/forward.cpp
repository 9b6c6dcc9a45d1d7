#include "coxam/forward.hpp"

#include <cmath>

#include "coxam/tree_recall.hpp"

namespace coxam {
namespace {

// Converts accumulated evidence into a lapse-mixed choice and charges the remaining time.
void finish(ForwardResult& r, const TrialContext& ctx, const DdmParams& ddm) {
  if (r.guessed) {
    r.evidence = 0.0;
    r.p_positive = 0.5;
    r.execution_time = 0.0;
    r.trace.push_back({TraceStep::Kind::kGuess, "guess", 0.5, std::nullopt});
  } else {
    const ChoiceOutcome c = ddm_choice(r.evidence, ddm);
    r.p_positive = apply_lapse(c.p_positive, ctx.lapse);
    r.execution_time = c.execution_time;
  }
  r.total_time = total_time(r.execution_time, r.n_reads, r.n_calcs);
  ctx.memory->advance(r.n_calcs * kSecondsPerCalculation + r.execution_time);
}

}  // namespace

double ratio_evidence(std::span<const EvidenceTerm> terms, double intercept) {
  double num = intercept;
  double den = std::abs(intercept);
  for (const auto& t : terms) {
    const double v = t.factor * t.value;
    num += v;
    den += std::abs(v);
  }
  return den > 0.0 ? num / den : 0.0;
}

ForwardResult approximate_calculation(const TrialContext& ctx, std::span<const std::size_t> subset,
                                      const DdmParams& ddm, Rng& rng) {
  validate(ddm);
  if (ctx.xai_visible() && !ctx.visible_weights()) {
    throw Error(ErrorCode::kUnavailable, "approximate calculation needs the weights explanation");
  }
  ForwardResult r;
  MemoryStore& memory = *ctx.memory;
  const Instance x = displayed(ctx.instance);
  const auto& attrs = ctx.attributes();
  std::vector<EvidenceTerm> terms;
  double intercept = 0.0;

  if (const WeightModel* w = ctx.visible_weights()) {
    memory.encode(ChunkType::kFactor, factor_chunk(kInterceptAttribute, w->intercept));
    intercept = w->intercept;
    for (const std::size_t i : subset) {
      r.trace.push_back({TraceStep::Kind::kRead, attrs[i].name, x[i], std::nullopt});
      r.trace.push_back({TraceStep::Kind::kRead, "factor " + attrs[i].name, w->factors[i], std::nullopt});
      memory.advance(2.0 * kSecondsPerRead);
      r.n_reads += 2;
      memory.encode(ChunkType::kFactor, factor_chunk(attrs[i].name, w->factors[i]));
      terms.push_back({w->factors[i], x[i]});
      r.partial_sums[i] = w->factors[i] * x[i];
    }
  } else {
    const Cue icue{{ChunkType::kFactor}, {{slot::kAttribute, std::string(kInterceptAttribute)}}};
    const auto ir = retrieve(memory, icue, ctx.retrieval, rng);
    if (ir.success()) intercept = slot_number(memory.chunk(*ir.chunk), slot::kFactor);
    for (const std::size_t i : subset) {
      const Cue cue{{ChunkType::kFactor}, {{slot::kAttribute, attrs[i].name}}};
      const auto fr = retrieve(memory, cue, ctx.retrieval, rng);
      memory.advance(kSecondsPerRead);
      ++r.n_reads;
      if (!fr.success()) {
        r.trace.push_back({TraceStep::Kind::kRetrievalFailure, "factor " + attrs[i].name, 0.0, std::nullopt});
        continue;
      }
      const Chunk& c = memory.chunk(*fr.chunk);
      const double factor = slot_number(c, slot::kFactor);
      r.trace.push_back({TraceStep::Kind::kRetrieval, "factor " + attrs[i].name, factor, std::nullopt});
      r.trace.push_back({TraceStep::Kind::kRead, attrs[i].name, x[i], std::nullopt});
      memory.advance(kSecondsPerRead);
      ++r.n_reads;
      terms.push_back({factor, x[i]});
      r.partial_sums[i] = factor * x[i];
    }
    r.guessed = terms.empty();
  }
  if (!terms.empty()) r.n_calcs = static_cast<int>(terms.size()) + 1;
  r.evidence = ratio_evidence(terms, intercept);
  r.trace.push_back({TraceStep::Kind::kCalculate, "weighted sum", r.evidence, std::nullopt});
  finish(r, ctx, ddm);
  return r;
}

ForwardResult feature_attribution(const TrialContext& ctx, std::span<const std::size_t> subset,
                                  const DdmParams& ddm, Rng& rng) {
  validate(ddm);
  if (!ctx.beliefs) throw Error(ErrorCode::kPrecondition, "feature attribution needs beliefs");
  ForwardResult r;
  MemoryStore& memory = *ctx.memory;
  const auto& attrs = ctx.attributes();
  const Instance x = displayed(ctx.instance);
  const Instance z = centered(attrs, x);
  std::vector<EvidenceTerm> terms;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const std::size_t i : subset) {
    const double omega = ctx.beliefs->mu[i] + ctx.beliefs->sigma[i] * normal(rng);
    r.trace.push_back({TraceStep::Kind::kRead, attrs[i].name, x[i], std::nullopt});
    r.trace.push_back({TraceStep::Kind::kSample, "belief " + attrs[i].name, omega, std::nullopt});
    memory.advance(kSecondsPerRead);
    ++r.n_reads;
    if (ctx.beliefs->persisted) memory.touch(ctx.beliefs->chunks[i]);
    terms.push_back({omega, z[i]});
    r.partial_sums[i] = omega * z[i];
  }
  r.evidence = ratio_evidence(terms);
  finish(r, ctx, ddm);
  return r;
}

ForwardResult ata_traversal(const TrialContext& ctx, const DdmParams& ddm, Rng& rng) {
  validate(ddm);
  if (ctx.xai_visible() && !ctx.visible_tree()) {
    throw Error(ErrorCode::kUnavailable, "tree traversal needs the rules explanation");
  }
  ForwardResult r;
  const TreeWalk walk = ctx.visible_tree() ? read_tree_walk(*ctx.visible_tree(), ctx)
                                           : recall_tree_walk(ctx, rng);
  r.n_reads = walk.n_reads;
  r.trace = walk.trace;
  if (walk.failed || !walk.leaf_label) {
    r.guessed = true;
  } else {
    const auto& attrs = ctx.attributes();
    const Instance x = displayed(ctx.instance);
    double distance = 0.0;
    for (const auto& n : walk.nodes) {
      const double d = std::abs(attrs[n.attribute].unit(x[n.attribute]) - attrs[n.attribute].unit(n.threshold));
      distance += d;
      r.partial_sums[n.attribute] = r.partial_sums[n.attribute].value_or(0.0) + d;
    }
    r.evidence = to_int(*walk.leaf_label) * distance;
    r.n_calcs = walk.nodes.empty() ? 0 : 1;
    r.trace.push_back({TraceStep::Kind::kCalculate, "threshold distance", r.evidence, walk.leaf_id});
  }
  finish(r, ctx, ddm);
  return r;
}

void update_mental_factors(Instance& mu, Instance& sigma, const Instance& x, double p, int y) {
  if (y != 0 && y != 1) throw Error(ErrorCode::kPrecondition, "observation must be 0 or 1");
  const double chi = p * (1.0 - p);
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    const double precision = 1.0 / (sigma[i] * sigma[i]) + chi * x[i] * x[i];
    const double var = 1.0 / precision;
    mu[i] += var * x[i] * (y - p);
    sigma[i] = std::sqrt(var);
  }
}

}  // namespace coxam
