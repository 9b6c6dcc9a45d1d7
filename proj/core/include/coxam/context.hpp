#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coxam/ai_model.hpp"
#include "coxam/dataset.hpp"
#include "coxam/memory.hpp"
#include "coxam/surrogates.hpp"

namespace coxam {

enum class SchemaKind { kNone, kWeights, kRules };

std::string_view schema_kind_name(SchemaKind kind);
SchemaKind parse_schema_kind(std::string_view name);

/// Between-subject explanation condition. Hybrid shows Weights or Rules per trial.
enum class XaiCondition { kWeights, kRules, kHybrid };

std::string_view xai_condition_name(XaiCondition c);
XaiCondition parse_xai_condition(std::string_view name);
inline bool has_weights(XaiCondition c) { return c != XaiCondition::kRules; }
inline bool has_rules(XaiCondition c) { return c != XaiCondition::kWeights; }

enum class Phase { kForward, kCounterfactual };

std::string_view phase_name(Phase p);
Phase parse_phase(std::string_view name);

/// Everything fixed about one task: attribute specs, the AI, and the explanations participants
/// see (stored at display precision).
struct TaskModels {
  AttributeSpecs attributes;
  AiModel ai;
  std::optional<WeightModel> weights;
  std::optional<RuleTree> tree;

  /// Rounds explanations to display precision; call after assigning full-precision models.
  void to_display_precision();
  std::optional<std::size_t> attribute_index(const std::string& name) const;
};

/// Gaussian beliefs over each attribute's factor, on the range-centred attribute scale.
struct MentalFactors {
  Instance mu{};
  Instance sigma{};
  std::array<ChunkId, kNumAttributes> chunks{};
  bool persisted = false;

  /// mu = sign of the shown factor (0 when none), sigma = 1.
  static MentalFactors initial(const std::optional<WeightModel>& weights);

  /// Writes the beliefs into mental-factor chunks (creating them on first call).
  void persist(MemoryStore& memory, const AttributeSpecs& attributes);

  /// Probability of +1 under the belief means for range-centred input z.
  double predicted_probability(const Instance& z) const;
};

/// Maps raw instance values onto [-1, 1] by attribute range.
Instance centered(const AttributeSpecs& specs, const Instance& x);

/// Instance as read from screen: three significant figures.
Instance displayed(const Instance& x);

/// What a strategy may consult on one trial. Explanation content is reachable only when it is
/// shown; otherwise it must come from memory.
struct TrialContext {
  const TaskModels* task = nullptr;
  Instance instance{};
  SchemaKind shown = SchemaKind::kNone;
  MemoryStore* memory = nullptr;
  MentalFactors* beliefs = nullptr;
  RetrievalParams retrieval;
  double lapse = kLapseRate;

  bool xai_visible() const { return shown != SchemaKind::kNone; }
  const WeightModel* visible_weights() const {
    return shown == SchemaKind::kWeights && task->weights ? &*task->weights : nullptr;
  }
  const RuleTree* visible_tree() const {
    return shown == SchemaKind::kRules && task->tree ? &*task->tree : nullptr;
  }
  const AttributeSpecs& attributes() const { return task->attributes; }
};

struct TraceStep {
  enum class Kind { kRead, kRetrieval, kRetrievalFailure, kCompare, kCalculate, kSample, kGuess };
  Kind kind = Kind::kRead;
  std::string what;
  double value = 0.0;
  std::optional<int> node;
};

std::string_view trace_kind_name(TraceStep::Kind kind);

}  // namespace coxam
