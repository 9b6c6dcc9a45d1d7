#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "coxam/session.hpp"

namespace coxam {

using Json = nlohmann::json;

/// Version stamped on every document this library writes.
inline constexpr int kSchemaVersion = 1;

/// Throws kParse unless `doc` carries a compatible schema_version.
void check_schema_version(const Json& doc, const std::string& what);

Json to_json(const AttributeSpecs& specs);
AttributeSpecs attribute_specs_from_json(const Json& j);

Json to_json(const AiModel& ai);
AiModel ai_model_from_json(const Json& j);

Json to_json(const WeightModel& w);
WeightModel weight_model_from_json(const Json& j);

Json to_json(const RuleTree& tree, const AttributeSpecs* specs = nullptr);
RuleTree rule_tree_from_json(const Json& j);

/// Attributes, AI and full-precision surrogates; the dataset travels separately as CSV.
Json task_to_json(const Task& task);
Task task_from_json(const Json& j);

Json to_json(const CognitiveParams& p);
/// Unknown keys are rejected.
CognitiveParams cognitive_params_from_json(const Json& j);

Json to_json(const MemoryStore& memory);
MemoryStore memory_from_json(const Json& j);

Json to_json(const TraceStep& step);
Json to_json(const std::vector<TraceStep>& trace);
TraceStep trace_step_from_json(const Json& j);

Json to_json(const Edit& edit, const std::optional<Strategy>& strategy = std::nullopt);
Edit edit_from_json(const Json& j);

Json to_json(const SessionConfig& config);
/// Unknown keys are rejected.
SessionConfig session_config_from_json(const Json& j);

/// One JSONL line of the trial log.
Json to_json(const TrialRecord& record);
TrialRecord trial_record_from_json(const Json& j);

/// What a participant may see for the current trial: no AI or surrogate label, explanation
/// content only when shown, values at display precision. A complete session yields an
/// end-of-session marker.
Json trial_payload(const Session& session);
Json feedback_payload(const Session& session, const FeedbackPayload& feedback);

/// Participant answer as posted by a client: {"label": "Type 1" | -1 | ...} or
/// {"edit": {"attribute_index", "new_value"}} or {"instance": [...]}.
TrialResponse trial_response_from_json(const Json& j, const Session& session);

Json to_json(const SessionScore& score);

/// Field names a payload must never expose before the participant answers.
const std::vector<std::string>& leaking_fields();
/// True if any object nested in `j` has a key from leaking_fields().
bool contains_leaking_field(const Json& j);

/// Validates a trial-log line: required fields, types and phase-dependent invariants.
/// Returns an empty string when valid, otherwise the first violation.
std::string validate_trial_record_json(const Json& j);

/// Writes `doc` to `path` atomically (temporary file, then rename).
void write_json_file(const std::string& path, const Json& doc);
Json read_json_file(const std::string& path);

}  // namespace coxam
