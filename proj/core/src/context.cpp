#include "coxam/context.hpp"

#include <cmath>

namespace coxam {

std::string_view schema_kind_name(SchemaKind kind) {
  switch (kind) {
    case SchemaKind::kNone: return "none";
    case SchemaKind::kWeights: return "weights";
    case SchemaKind::kRules: return "rules";
  }
  return "none";
}

SchemaKind parse_schema_kind(std::string_view name) {
  if (name == "weights") return SchemaKind::kWeights;
  if (name == "rules") return SchemaKind::kRules;
  if (name == "none") return SchemaKind::kNone;
  throw Error(ErrorCode::kValidation, "unknown schema '" + std::string(name) + "'");
}

std::string_view xai_condition_name(XaiCondition c) {
  switch (c) {
    case XaiCondition::kWeights: return "weights";
    case XaiCondition::kRules: return "rules";
    case XaiCondition::kHybrid: return "hybrid";
  }
  return "weights";
}

XaiCondition parse_xai_condition(std::string_view name) {
  if (name == "weights") return XaiCondition::kWeights;
  if (name == "rules") return XaiCondition::kRules;
  if (name == "hybrid") return XaiCondition::kHybrid;
  throw Error(ErrorCode::kValidation, "unknown xai schema '" + std::string(name) + "'");
}

std::string_view phase_name(Phase p) { return p == Phase::kForward ? "forward" : "counterfactual"; }

Phase parse_phase(std::string_view name) {
  if (name == "forward") return Phase::kForward;
  if (name == "counterfactual") return Phase::kCounterfactual;
  throw Error(ErrorCode::kValidation, "unknown phase '" + std::string(name) + "'");
}

void TaskModels::to_display_precision() {
  if (weights) weights = weights->displayed();
  if (tree) tree = tree->displayed();
}

std::optional<std::size_t> TaskModels::attribute_index(const std::string& name) const {
  for (const auto& spec : attributes) {
    if (spec.name == name) return spec.index;
  }
  return std::nullopt;
}

MentalFactors MentalFactors::initial(const std::optional<WeightModel>& weights) {
  MentalFactors out;
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    double mu = 0.0;
    if (weights && weights->factors[i] != 0.0) mu = weights->factors[i] > 0.0 ? 1.0 : -1.0;
    out.mu[i] = mu;
    out.sigma[i] = 1.0;
  }
  return out;
}

void MentalFactors::persist(MemoryStore& memory, const AttributeSpecs& attributes) {
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    const auto slots = mental_factor_chunk(attributes[i].name, mu[i], sigma[i]);
    if (!persisted) {
      chunks[i] = memory.encode(ChunkType::kMentalFactor, slots);
    } else {
      memory.update_slots(chunks[i], slots);
      memory.touch(chunks[i]);
    }
  }
  persisted = true;
}

double MentalFactors::predicted_probability(const Instance& z) const {
  double s = 0.0;
  for (std::size_t i = 0; i < kNumAttributes; ++i) s += mu[i] * z[i];
  return logistic(s);
}

Instance centered(const AttributeSpecs& specs, const Instance& x) {
  Instance z{};
  for (std::size_t i = 0; i < kNumAttributes; ++i) z[i] = specs[i].centered(x[i]);
  return z;
}

Instance displayed(const Instance& x) {
  Instance out{};
  for (std::size_t i = 0; i < kNumAttributes; ++i) out[i] = round_sig(x[i]);
  return out;
}

std::string_view trace_kind_name(TraceStep::Kind kind) {
  switch (kind) {
    case TraceStep::Kind::kRead: return "read";
    case TraceStep::Kind::kRetrieval: return "retrieval";
    case TraceStep::Kind::kRetrievalFailure: return "retrieval_failure";
    case TraceStep::Kind::kCompare: return "compare";
    case TraceStep::Kind::kCalculate: return "calculate";
    case TraceStep::Kind::kSample: return "sample";
    case TraceStep::Kind::kGuess: return "guess";
  }
  return "read";
}

}  // namespace coxam
