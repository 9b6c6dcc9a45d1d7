#include "coxam/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace coxam {
namespace {

void reject_unknown(const Json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  if (!j.is_object()) throw Error(ErrorCode::kParse, what + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!known) throw Error(ErrorCode::kParse, what + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get_field(const Json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) throw Error(ErrorCode::kParse, what + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, what + ": bad '" + key + "': " + e.what());
  }
}

Json instance_json(const Instance& x) { return Json(std::vector<double>(x.begin(), x.end())); }

Instance instance_from(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != kNumAttributes) {
    throw Error(ErrorCode::kParse, what + " must be an array of " + std::to_string(kNumAttributes) + " numbers");
  }
  Instance x{};
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    if (!j[i].is_number()) throw Error(ErrorCode::kParse, what + " must contain numbers");
    x[i] = j[i].get<double>();
  }
  return x;
}

Label label_from_json(const Json& j, const std::string& what) {
  if (j.is_number_integer()) return label_from_int(j.get<int>());
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == display_name(Label::Negative)) return Label::Negative;
    if (s == display_name(Label::Positive)) return Label::Positive;
  }
  throw Error(ErrorCode::kValidation, what + " must be -1, 1, \"" + std::string(display_name(Label::Negative)) +
                                          "\" or \"" + std::string(display_name(Label::Positive)) + "\"");
}

Json slot_json(const Slots& slots) {
  Json j = Json::object();
  for (const auto& [k, v] : slots) {
    if (std::holds_alternative<double>(v)) {
      j[k] = std::get<double>(v);
    } else {
      j[k] = std::get<std::string>(v);
    }
  }
  return j;
}

Json label_map() {
  return Json{{"-1", display_name(Label::Negative)}, {"1", display_name(Label::Positive)}};
}

}  // namespace

void check_schema_version(const Json& doc, const std::string& what) {
  if (!doc.is_object() || !doc.contains("schema_version")) {
    throw Error(ErrorCode::kParse, what + ": missing schema_version");
  }
  if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != kSchemaVersion) {
    throw Error(ErrorCode::kParse, what + ": unsupported schema_version " + doc["schema_version"].dump());
  }
}

Json to_json(const AttributeSpecs& specs) {
  Json arr = Json::array();
  for (const auto& s : specs) {
    Json a{{"name", s.name}, {"index", s.index}, {"min", s.min}, {"max", s.max}};
    if (s.display_unit) a["display_unit"] = *s.display_unit;
    arr.push_back(a);
  }
  return arr;
}

AttributeSpecs attribute_specs_from_json(const Json& j) {
  if (!j.is_array() || j.size() != kNumAttributes) {
    throw Error(ErrorCode::kParse, "attributes must list exactly six entries");
  }
  AttributeSpecs specs;
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    const Json& a = j[i];
    reject_unknown(a, {"name", "index", "min", "max", "display_unit"}, "attribute");
    specs[i].name = get_field<std::string>(a, "name", "attribute");
    specs[i].index = get_field<std::size_t>(a, "index", "attribute");
    specs[i].min = get_field<double>(a, "min", "attribute");
    specs[i].max = get_field<double>(a, "max", "attribute");
    if (a.contains("display_unit")) specs[i].display_unit = a["display_unit"].get<std::string>();
  }
  validate_specs(specs);
  return specs;
}

Json to_json(const AiModel& ai) {
  return Json{{"schema_version", kSchemaVersion},
              {"kind", "mlp"},
              {"hidden_units", ai.hidden_units()},
              {"input_mean", instance_json(ai.input_mean)},
              {"input_scale", instance_json(ai.input_scale)},
              {"hidden_weights", ai.hidden_weights_},
              {"hidden_bias", ai.hidden_bias_},
              {"output_weights", ai.output_weights_},
              {"output_bias", ai.output_bias_},
              {"train_accuracy", ai.train_accuracy},
              {"test_accuracy", ai.test_accuracy},
              {"non_converged", ai.non_converged}};
}

AiModel ai_model_from_json(const Json& j) {
  check_schema_version(j, "ai model");
  const std::string what = "ai model";
  AiModel ai;
  const auto h = get_field<std::size_t>(j, "hidden_units", what);
  ai.input_mean = instance_from(j.at("input_mean"), "input_mean");
  ai.input_scale = instance_from(j.at("input_scale"), "input_scale");
  ai.hidden_weights_ = get_field<std::vector<double>>(j, "hidden_weights", what);
  ai.hidden_bias_ = get_field<std::vector<double>>(j, "hidden_bias", what);
  ai.output_weights_ = get_field<std::vector<double>>(j, "output_weights", what);
  ai.output_bias_ = get_field<double>(j, "output_bias", what);
  if (ai.hidden_weights_.size() != h * kNumAttributes || ai.hidden_bias_.size() != h ||
      ai.output_weights_.size() != h) {
    throw Error(ErrorCode::kParse, "ai model layer shapes do not match hidden_units");
  }
  ai.train_accuracy = j.value("train_accuracy", 0.0);
  ai.test_accuracy = j.value("test_accuracy", 0.0);
  ai.non_converged = j.value("non_converged", false);
  return ai;
}

Json to_json(const WeightModel& w) {
  return Json{{"intercept", w.intercept}, {"factors", instance_json(w.factors)}, {"clamped", w.clamped}};
}

WeightModel weight_model_from_json(const Json& j) {
  WeightModel w;
  w.intercept = get_field<double>(j, "intercept", "weights");
  w.factors = instance_from(j.at("factors"), "factors");
  w.clamped = j.value("clamped", false);
  return w;
}

Json to_json(const RuleTree& tree, const AttributeSpecs* specs) {
  Json nodes = Json::array();
  for (const auto& n : tree.nodes) {
    Json node{{"id", n.id}, {"leaf", n.leaf}};
    if (n.leaf) {
      node["label"] = to_int(n.label);
    } else {
      node["attribute_index"] = n.attribute;
      if (specs) node["attribute"] = (*specs)[n.attribute].name;
      node["threshold"] = n.threshold;
      node["left"] = n.left;
      node["right"] = n.right;
    }
    nodes.push_back(node);
  }
  return Json{{"depth", tree.depth}, {"nodes", nodes}};
}

RuleTree rule_tree_from_json(const Json& j) {
  RuleTree tree;
  tree.depth = get_field<int>(j, "depth", "tree");
  for (const auto& node : j.at("nodes")) {
    RuleTree::Node n;
    n.id = get_field<int>(node, "id", "tree node");
    n.leaf = get_field<bool>(node, "leaf", "tree node");
    if (n.leaf) {
      n.label = label_from_int(get_field<int>(node, "label", "tree node"));
    } else {
      n.attribute = get_field<std::size_t>(node, "attribute_index", "tree node");
      n.threshold = get_field<double>(node, "threshold", "tree node");
      n.left = get_field<int>(node, "left", "tree node");
      n.right = get_field<int>(node, "right", "tree node");
    }
    tree.nodes.push_back(n);
  }
  tree.validate();
  return tree;
}

Json task_to_json(const Task& task) {
  return Json{{"schema_version", kSchemaVersion},
              {"scenario", task.scenario},
              {"complexity", complexity_name(task.complexity)},
              {"attributes", to_json(task.models.attributes)},
              {"ai", to_json(task.models.ai)},
              {"weights", to_json(task.weights_full)},
              {"tree", to_json(task.tree_full, &task.models.attributes)}};
}

Task task_from_json(const Json& j) {
  check_schema_version(j, "task");
  return assemble_task(get_field<std::string>(j, "scenario", "task"),
                       parse_complexity(get_field<std::string>(j, "complexity", "task")),
                       attribute_specs_from_json(j.at("attributes")), ai_model_from_json(j.at("ai")),
                       weight_model_from_json(j.at("weights")), rule_tree_from_json(j.at("tree")));
}

Json to_json(const CognitiveParams& p) {
  return Json{{"kappa", p.kappa}, {"gamma", p.gamma}, {"nu", p.nu},       {"epsilon", p.epsilon},
              {"zeta", p.zeta},   {"lapse", p.lapse}, {"depth_sd", p.depth_sd}};
}

CognitiveParams cognitive_params_from_json(const Json& j) {
  reject_unknown(j, {"kappa", "gamma", "nu", "epsilon", "zeta", "lapse", "depth_sd"}, "cognitive params");
  CognitiveParams p;
  p.kappa = j.value("kappa", p.kappa);
  p.gamma = j.value("gamma", p.gamma);
  p.nu = j.value("nu", p.nu);
  p.epsilon = j.value("epsilon", p.epsilon);
  p.zeta = j.value("zeta", p.zeta);
  p.lapse = j.value("lapse", p.lapse);
  p.depth_sd = j.value("depth_sd", p.depth_sd);
  p.validate();
  return p;
}

Json to_json(const MemoryStore& memory) {
  Json chunks = Json::array();
  for (const auto& c : memory.chunks()) {
    chunks.push_back(Json{{"id", c.id},
                          {"type", chunk_type_name(c.type)},
                          {"slots", slot_json(c.slots)},
                          {"use_times", c.use_times}});
  }
  return Json{{"schema_version", kSchemaVersion}, {"clock", memory.clock()}, {"chunks", chunks}};
}

MemoryStore memory_from_json(const Json& j) {
  check_schema_version(j, "memory");
  std::vector<Chunk> chunks;
  for (const auto& cj : j.at("chunks")) {
    Chunk c;
    c.id = get_field<int>(cj, "id", "chunk");
    const auto type = parse_chunk_type(get_field<std::string>(cj, "type", "chunk"));
    if (!type) throw Error(ErrorCode::kParse, "chunk: unknown type " + cj.at("type").dump());
    c.type = *type;
    for (const auto& [k, v] : cj.at("slots").items()) {
      if (v.is_number()) {
        c.slots[k] = v.get<double>();
      } else if (v.is_string()) {
        c.slots[k] = v.get<std::string>();
      } else {
        throw Error(ErrorCode::kParse, "chunk slot '" + k + "' must be a number or string");
      }
    }
    c.use_times = get_field<std::vector<double>>(cj, "use_times", "chunk");
    chunks.push_back(std::move(c));
  }
  return MemoryStore::from_chunks(std::move(chunks), get_field<double>(j, "clock", "memory"));
}

Json to_json(const TraceStep& step) {
  Json j{{"kind", trace_kind_name(step.kind)}, {"what", step.what}, {"value", step.value}};
  if (step.node) j["node"] = *step.node;
  return j;
}

Json to_json(const std::vector<TraceStep>& trace) {
  Json arr = Json::array();
  for (const auto& s : trace) arr.push_back(to_json(s));
  return arr;
}

TraceStep trace_step_from_json(const Json& j) {
  static const std::pair<const char*, TraceStep::Kind> kinds[] = {
      {"read", TraceStep::Kind::kRead},         {"retrieval", TraceStep::Kind::kRetrieval},
      {"retrieval_failure", TraceStep::Kind::kRetrievalFailure},
      {"compare", TraceStep::Kind::kCompare},   {"calculate", TraceStep::Kind::kCalculate},
      {"sample", TraceStep::Kind::kSample},     {"guess", TraceStep::Kind::kGuess}};
  TraceStep s;
  const auto kind = get_field<std::string>(j, "kind", "trace step");
  const auto it = std::find_if(std::begin(kinds), std::end(kinds), [&](const auto& k) { return kind == k.first; });
  if (it == std::end(kinds)) throw Error(ErrorCode::kParse, "trace step: unknown kind '" + kind + "'");
  s.kind = it->second;
  s.what = get_field<std::string>(j, "what", "trace step");
  s.value = get_field<double>(j, "value", "trace step");
  if (j.contains("node")) s.node = j["node"].get<int>();
  return s;
}

Json to_json(const Edit& edit, const std::optional<Strategy>& strategy) {
  Json j{{"attribute_index", edit.attribute},
         {"old_value", edit.old_value},
         {"new_value", edit.new_value},
         {"delta", edit.delta},
         {"clamped", edit.clamped}};
  j["strategy"] = strategy ? Json(strategy_name(*strategy)) : Json(nullptr);
  return j;
}

Edit edit_from_json(const Json& j) {
  Edit e;
  e.attribute = get_field<std::size_t>(j, "attribute_index", "edit");
  if (e.attribute >= kNumAttributes) throw Error(ErrorCode::kValidation, "edit attribute_index out of range");
  e.old_value = get_field<double>(j, "old_value", "edit");
  e.new_value = get_field<double>(j, "new_value", "edit");
  e.delta = j.value("delta", e.new_value - e.old_value);
  e.clamped = j.value("clamped", false);
  return e;
}

Json to_json(const SessionConfig& c) {
  return Json{{"scenario", c.scenario},
              {"xai_schema", xai_condition_name(c.condition)},
              {"complexity", complexity_name(c.complexity)},
              {"n_forward", c.n_forward},
              {"n_counterfactual", c.n_counterfactual},
              {"seed", c.seed},
              {"schedule", visibility_schedule_name(c.schedule)},
              {"participant_id", c.participant_id},
              {"label_anonymization", label_map()}};
}

SessionConfig session_config_from_json(const Json& j) {
  reject_unknown(j,
                 {"scenario", "xai_schema", "complexity", "n_forward", "n_counterfactual", "seed", "schedule",
                  "participant_id", "label_anonymization", "schema_version"},
                 "session config");
  SessionConfig c;
  c.scenario = j.value("scenario", c.scenario);
  if (j.contains("xai_schema")) c.condition = parse_xai_condition(j["xai_schema"].get<std::string>());
  if (j.contains("complexity")) c.complexity = parse_complexity(j["complexity"].get<std::string>());
  c.n_forward = j.value("n_forward", c.n_forward);
  c.n_counterfactual = j.value("n_counterfactual", c.n_counterfactual);
  c.seed = j.value("seed", c.seed);
  if (j.contains("schedule")) c.schedule = parse_visibility_schedule(j["schedule"].get<std::string>());
  c.participant_id = j.value("participant_id", c.participant_id);
  c.validate();
  return c;
}

Json to_json(const TrialRecord& r) {
  Json j{{"schema_version", kSchemaVersion},
         {"trial_index", r.trial_index},
         {"phase", phase_name(r.phase)},
         {"instance_id", r.instance_id},
         {"xai_visible", r.xai_visible},
         {"schema_shown", schema_kind_name(r.shown)},
         {"instance", instance_json(r.instance)},
         {"ai_label", to_int(r.ai_label)},
         {"surrogate_label", to_int(r.surrogate_label)},
         {"feedback_shown", r.feedback_shown},
         {"feedback_deferred", r.feedback_deferred}};
  Json response = Json::object();
  if (r.response_label) response["label"] = to_int(*r.response_label);
  if (r.edit) {
    std::optional<Strategy> s;
    if (r.simulation) s = r.simulation->strategy;
    response["edit"] = to_json(*r.edit, s);
  }
  j["response"] = response;
  j["response_time_ms"] = r.response_time_ms ? Json(*r.response_time_ms) : Json(nullptr);
  j["simulated_time_s"] = r.simulated_time_s ? Json(*r.simulated_time_s) : Json(nullptr);
  if (r.simulation) {
    const auto& s = *r.simulation;
    Json sim{{"strategy", strategy_name(s.strategy)},
             {"action_index", s.action_index},
             {"effort", s.effort},
             {"subset_size", s.subset_size},
             {"depth", s.depth},
             {"p_positive", s.p_positive},
             {"evidence", s.evidence},
             {"n_reads", s.n_reads},
             {"n_calcs", s.n_calcs},
             {"execution_time", s.execution_time},
             {"guessed", s.guessed},
             {"cold_start", s.cold_start},
             {"fell_back", s.fell_back},
             {"clamped", s.clamped},
             {"attribute_probabilities", instance_json(s.attribute_probabilities)},
             {"trace", to_json(s.trace)}};
    sim["target"] = s.target ? Json(to_int(*s.target)) : Json(nullptr);
    j["simulation"] = sim;
  }
  return j;
}

TrialRecord trial_record_from_json(const Json& j) {
  const std::string problem = validate_trial_record_json(j);
  if (!problem.empty()) throw Error(ErrorCode::kParse, "trial record: " + problem);
  TrialRecord r;
  r.trial_index = j["trial_index"].get<int>();
  r.phase = parse_phase(j["phase"].get<std::string>());
  r.instance_id = j["instance_id"].get<int>();
  r.xai_visible = j["xai_visible"].get<bool>();
  r.shown = parse_schema_kind(j["schema_shown"].get<std::string>());
  r.instance = instance_from(j["instance"], "instance");
  r.ai_label = label_from_int(j["ai_label"].get<int>());
  r.surrogate_label = label_from_int(j["surrogate_label"].get<int>());
  r.feedback_shown = j["feedback_shown"].get<bool>();
  r.feedback_deferred = j["feedback_deferred"].get<bool>();
  const Json& response = j["response"];
  if (response.contains("label")) r.response_label = label_from_int(response["label"].get<int>());
  if (response.contains("edit")) r.edit = edit_from_json(response["edit"]);
  if (!j["response_time_ms"].is_null()) r.response_time_ms = j["response_time_ms"].get<double>();
  if (!j["simulated_time_s"].is_null()) r.simulated_time_s = j["simulated_time_s"].get<double>();
  if (j.contains("simulation")) {
    const Json& s = j["simulation"];
    SimulationDetail d;
    d.strategy = parse_strategy(s.at("strategy").get<std::string>());
    d.action_index = s.value("action_index", std::size_t{0});
    d.effort = s.value("effort", 0.0);
    d.subset_size = s.value("subset_size", 0);
    d.depth = s.value("depth", 0);
    d.p_positive = s.value("p_positive", 0.5);
    d.evidence = s.value("evidence", 0.0);
    d.n_reads = s.value("n_reads", 0);
    d.n_calcs = s.value("n_calcs", 0);
    d.execution_time = s.value("execution_time", 0.0);
    d.guessed = s.value("guessed", false);
    d.cold_start = s.value("cold_start", false);
    d.fell_back = s.value("fell_back", false);
    d.clamped = s.value("clamped", false);
    if (s.contains("target") && !s["target"].is_null()) d.target = label_from_int(s["target"].get<int>());
    if (s.contains("attribute_probabilities")) {
      d.attribute_probabilities = instance_from(s["attribute_probabilities"], "attribute_probabilities");
    }
    if (s.contains("trace")) {
      for (const auto& step : s["trace"]) d.trace.push_back(trace_step_from_json(step));
    }
    r.simulation = d;
  }
  return r;
}

std::string validate_trial_record_json(const Json& j) {
  if (!j.is_object()) return "not an object";
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer() ||
      j["schema_version"].get<int>() != kSchemaVersion) {
    return "schema_version missing or unsupported";
  }
  const std::pair<const char*, Json::value_t> required[] = {
      {"trial_index", Json::value_t::number_unsigned}, {"phase", Json::value_t::string},
      {"instance_id", Json::value_t::number_unsigned}, {"xai_visible", Json::value_t::boolean},
      {"schema_shown", Json::value_t::string},         {"instance", Json::value_t::array},
      {"ai_label", Json::value_t::number_integer},     {"surrogate_label", Json::value_t::number_integer},
      {"response", Json::value_t::object},             {"feedback_shown", Json::value_t::boolean},
      {"feedback_deferred", Json::value_t::boolean}};
  for (const auto& [key, type] : required) {
    if (!j.contains(key)) return std::string("missing '") + key + "'";
    const Json& v = j[key];
    const bool ok = type == Json::value_t::number_unsigned ? v.is_number_integer() && v.get<long long>() >= 0
                    : type == Json::value_t::number_integer ? v.is_number_integer()
                                                            : v.type() == type;
    if (!ok) return std::string("wrong type for '") + key + "'";
  }
  for (const char* key : {"response_time_ms", "simulated_time_s"}) {
    if (!j.contains(key)) return std::string("missing '") + key + "'";
    if (!j[key].is_null() && !j[key].is_number()) return std::string("wrong type for '") + key + "'";
  }
  if (j["instance"].size() != kNumAttributes) return "instance must hold six values";
  for (const auto& v : j["instance"]) {
    if (!v.is_number()) return "instance values must be numbers";
  }
  for (const char* key : {"ai_label", "surrogate_label"}) {
    const int v = j[key].get<int>();
    if (v != -1 && v != 1) return std::string("'") + key + "' must be -1 or 1";
  }
  const std::string phase = j["phase"].get<std::string>();
  const std::string shown = j["schema_shown"].get<std::string>();
  if (shown != "none" && shown != "weights" && shown != "rules") return "unknown schema_shown";
  if (j["xai_visible"].get<bool>() != (shown != "none")) return "xai_visible disagrees with schema_shown";
  const Json& response = j["response"];
  if (phase == "forward") {
    if (!j["feedback_shown"].get<bool>()) return "forward trials must record feedback";
    if (!response.contains("label") || response.contains("edit")) return "forward response must be a label";
    const Json& l = response["label"];
    if (!l.is_number_integer() || (l.get<int>() != -1 && l.get<int>() != 1)) return "label must be -1 or 1";
  } else if (phase == "counterfactual") {
    if (j["feedback_shown"].get<bool>()) return "counterfactual trials never show AI feedback";
    if (!response.contains("edit") || response.contains("label")) return "counterfactual response must be an edit";
    const Json& e = response["edit"];
    for (const char* key : {"attribute_index", "old_value", "new_value", "clamped"}) {
      if (!e.contains(key)) return std::string("edit missing '") + key + "'";
    }
    if (!e.contains("strategy")) return "edit missing 'strategy'";
    if (!e["attribute_index"].is_number_integer() || e["attribute_index"].get<long long>() < 0 ||
        e["attribute_index"].get<long long>() >= static_cast<long long>(kNumAttributes)) {
      return "edit attribute_index out of range";
    }
    if (!e["old_value"].is_number() || !e["new_value"].is_number()) return "edit values must be numbers";
    if (e["old_value"].get<double>() == e["new_value"].get<double>()) return "edit must change the value";
  } else {
    return "unknown phase";
  }
  return {};
}

Json trial_payload(const Session& session) {
  Json j{{"schema_version", kSchemaVersion}, {"session_id", session.id()}};
  if (session.complete()) {
    j["complete"] = true;
    j["status"] = session_status_name(session.status());
    return j;
  }
  const ScheduledTrial& t = session.current();
  const Task& task = session.task();
  const auto& attrs = task.models.attributes;
  const Instance x = displayed(t.instance);
  j["complete"] = false;
  j["status"] = session_status_name(session.status() == SessionStatus::kCreated ? SessionStatus::kForward
                                                                                 : session.status());
  j["trial_index"] = t.trial_index;
  j["phase"] = phase_name(t.phase);
  j["xai_visible"] = t.xai_visible;
  j["schema_shown"] = schema_kind_name(t.shown);
  j["labels"] = label_map();
  j["response_kind"] = t.phase == Phase::kForward ? "label" : "edit";
  Json rows = Json::array();
  for (std::size_t a = 0; a < kNumAttributes; ++a) {
    const auto& s = attrs[a];
    Json row{{"index", a},
             {"name", s.name},
             {"value", x[a]},
             {"display", format_sig3(x[a])},
             {"min", s.min},
             {"max", s.max},
             {"bar_fraction", std::clamp(s.unit(x[a]), 0.0, 1.0)}};
    if (s.display_unit) row["unit"] = *s.display_unit;
    if (t.phase == Phase::kCounterfactual) row["slider"] = Json{{"min", s.min}, {"max", s.max}, {"initial", x[a]}};
    rows.push_back(row);
  }
  j["attributes"] = rows;
  if (t.shown == SchemaKind::kWeights && task.models.weights) {
    const WeightModel& w = *task.models.weights;
    Json factors = Json::array();
    for (std::size_t a = 0; a < kNumAttributes; ++a) {
      factors.push_back(Json{{"index", a}, {"attribute", attrs[a].name}, {"factor", w.factors[a]},
                             {"display", format_sig3(w.factors[a])}});
    }
    // Partial products and the total are withheld during decisions.
    j["weights"] = Json{{"intercept", w.intercept}, {"intercept_display", format_sig3(w.intercept)},
                        {"factors", factors}};
  }
  if (t.shown == SchemaKind::kRules && task.models.tree) {
    Json tree = to_json(*task.models.tree, &attrs);
    tree["highlight_path"] = false;
    j["tree"] = tree;
  }
  return j;
}

Json feedback_payload(const Session& session, const FeedbackPayload& feedback) {
  Json j{{"schema_version", kSchemaVersion}, {"session_id", session.id()}};
  switch (feedback.kind) {
    case FeedbackPayload::Kind::kFeedback: {
      j["kind"] = "feedback";
      Json released = Json::array();
      for (const auto& [index, label] : feedback.released) {
        released.push_back(Json{{"trial_index", index}, {"ai_label", to_int(label)},
                                {"ai_label_display", display_name(label)}});
      }
      j["released"] = released;
      const auto& last = session.records().back();
      j["ai_label"] = to_int(last.ai_label);
      j["ai_label_display"] = display_name(last.ai_label);
      if (last.shown == SchemaKind::kRules && session.task().models.tree) {
        j["highlight_path"] = session.task().models.tree->path(displayed(last.instance));
      }
      break;
    }
    case FeedbackPayload::Kind::kDeferred: j["kind"] = "deferred"; break;
    case FeedbackPayload::Kind::kAcknowledged: j["kind"] = "acknowledged"; break;
  }
  j["complete"] = session.complete();
  return j;
}

TrialResponse trial_response_from_json(const Json& j, const Session& session) {
  reject_unknown(j, {"label", "edit", "instance", "response_time_ms", "schema_version"}, "response");
  TrialResponse r;
  if (j.contains("response_time_ms") && !j["response_time_ms"].is_null()) {
    if (!j["response_time_ms"].is_number()) throw Error(ErrorCode::kValidation, "response_time_ms must be a number");
    r.response_time_ms = j["response_time_ms"].get<double>();
  }
  if (j.contains("label")) r.label = label_from_json(j["label"], "label");
  if (j.contains("edit") && j.contains("instance")) {
    throw Error(ErrorCode::kValidation, "send either 'edit' or 'instance', not both");
  }
  if (j.contains("instance")) {
    try {
      r.edited_instance = instance_from(j["instance"], "instance");
    } catch (const Error& e) {
      throw Error(ErrorCode::kValidation, e.what());
    }
  }
  if (j.contains("edit")) {
    const Json& e = j["edit"];
    if (!e.is_object() || !e.contains("attribute_index") || !e.contains("new_value") ||
        !e["attribute_index"].is_number_integer() || !e["new_value"].is_number()) {
      throw Error(ErrorCode::kValidation, "edit needs integer attribute_index and numeric new_value");
    }
    const auto a = e["attribute_index"].get<long long>();
    if (a < 0 || a >= static_cast<long long>(kNumAttributes)) {
      throw Error(ErrorCode::kValidation, "edit attribute_index out of range");
    }
    Instance x = displayed(session.current().instance);
    x[static_cast<std::size_t>(a)] = e["new_value"].get<double>();
    r.edited_instance = x;
  }
  return r;
}

Json to_json(const SessionScore& s) {
  return Json{{"forward_accuracy", s.forward_accuracy},
              {"counterfactual_accuracy", s.counterfactual_accuracy},
              {"n_forward", s.n_forward},
              {"n_counterfactual", s.n_counterfactual},
              {"forward_with_xai", s.forward_with_xai},
              {"forward_without_xai", s.forward_without_xai},
              {"n_forward_with_xai", s.n_forward_with_xai},
              {"n_forward_without_xai", s.n_forward_without_xai}};
}

const std::vector<std::string>& leaking_fields() {
  static const std::vector<std::string> fields{"ai_label", "surrogate_label", "ai_prediction", "prediction",
                                               "ai_label_display"};
  return fields;
}

bool contains_leaking_field(const Json& j) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      if (std::find(leaking_fields().begin(), leaking_fields().end(), key) != leaking_fields().end()) return true;
      if (contains_leaking_field(value)) return true;
    }
  } else if (j.is_array()) {
    for (const auto& v : j) {
      if (contains_leaking_field(v)) return true;
    }
  }
  return false;
}

void write_json_file(const std::string& path, const Json& doc) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out << doc.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
}

}  // namespace coxam
