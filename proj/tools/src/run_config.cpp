#include "coxam_cli/run_config.hpp"

#include <cstdlib>
#include <set>

namespace coxam::cli {
namespace {

// Reads an object field by field and rejects whatever is left over.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(ErrorCode::kConfig, path_ + " must be an object");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::kConfig, where(key) + " has the wrong type");
    }
  }

  const Json* child(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  std::string where(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw Error(ErrorCode::kConfig, "unknown key " + where(key));
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<std::pair<double, double>> bounds_from(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::kConfig, path + " must list three [low, high] pairs");
  std::vector<std::pair<double, double>> out;
  for (const auto& b : j) {
    if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number()) {
      throw Error(ErrorCode::kConfig, path + " entries must be [low, high]");
    }
    const double lo = b[0].get<double>();
    const double hi = b[1].get<double>();
    if (!(hi > lo)) throw Error(ErrorCode::kConfig, path + " needs low < high");
    out.emplace_back(lo, hi);
  }
  return out;
}

std::vector<std::string> string_list(const Json& j, const std::string& path) {
  if (!j.is_array()) throw Error(ErrorCode::kConfig, path + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw Error(ErrorCode::kConfig, path + " must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

Json bounds_json(const std::vector<std::pair<double, double>>& b) {
  Json out = Json::array();
  for (const auto& [lo, hi] : b) out.push_back({lo, hi});
  return out;
}

ScenarioConfig scenario_from(const Json& j, const std::string& path) {
  Reader r(j, path);
  ScenarioConfig s;
  r.get("name", s.name);
  std::string csv, synthetic, delimiter = ",";
  r.get("csv", csv);
  r.get("synthetic", synthetic);
  r.get("n_rows", s.n_rows);
  r.get("attributes", s.attributes);
  r.get("delimiter", delimiter);
  if (const Json* t = r.child("target")) {
    Reader tr(*t, r.where("target"));
    tr.get("column", s.target.column);
    double threshold = 0.0;
    std::string positive;
    if (t->contains("threshold")) {
      tr.get("threshold", threshold);
      s.target.threshold = threshold;
    }
    if (t->contains("positive_value")) {
      tr.get("positive_value", positive);
      s.target.positive_value = positive;
    }
    tr.finish();
  }
  r.finish();
  if (s.name.empty()) throw Error(ErrorCode::kConfig, path + ".name is required");
  if (!csv.empty()) s.csv = csv;
  if (!synthetic.empty()) s.synthetic = synthetic;
  if (s.csv.has_value() == s.synthetic.has_value()) {
    throw Error(ErrorCode::kConfig, path + " needs exactly one of csv or synthetic");
  }
  if (s.synthetic && !parse_synthetic_kind(*s.synthetic)) {
    throw Error(ErrorCode::kConfig, path + ".synthetic: unknown generator '" + *s.synthetic + "'");
  }
  if (s.csv) {
    if (s.target.column.empty()) throw Error(ErrorCode::kConfig, path + ".target.column is required for csv input");
    if (s.target.threshold.has_value() == s.target.positive_value.has_value()) {
      throw Error(ErrorCode::kConfig, path + ".target needs exactly one of threshold or positive_value");
    }
  }
  if (!s.attributes.empty() && s.attributes.size() != kNumAttributes) {
    throw Error(ErrorCode::kConfig, path + ".attributes must name exactly six columns");
  }
  if (delimiter.size() != 1) throw Error(ErrorCode::kConfig, path + ".delimiter must be one character");
  s.delimiter = delimiter[0];
  if (s.n_rows < kMinUsableRows) throw Error(ErrorCode::kConfig, path + ".n_rows is below the usable minimum");
  return s;
}

Json scenario_json(const ScenarioConfig& s) {
  Json j{{"name", s.name}, {"n_rows", s.n_rows}, {"attributes", s.attributes}, {"delimiter", std::string(1, s.delimiter)}};
  if (s.csv) j["csv"] = *s.csv;
  if (s.synthetic) j["synthetic"] = *s.synthetic;
  if (!s.target.column.empty() || s.target.threshold || s.target.positive_value) {
    Json t{{"column", s.target.column}};
    if (s.target.threshold) t["threshold"] = *s.target.threshold;
    if (s.target.positive_value) t["positive_value"] = *s.target.positive_value;
    j["target"] = t;
  }
  return j;
}

}  // namespace

RunConfig default_run_config() {
  RunConfig c;
  ScenarioConfig wine;
  wine.name = "wine";
  wine.synthetic = "wine-like";
  ScenarioConfig mushrooms;
  mushrooms.name = "mushrooms";
  mushrooms.synthetic = "mushroom-like";
  c.scenarios = {wine, mushrooms};
  return c;
}

RunConfig run_config_from_json(const Json& j) {
  RunConfig c = default_run_config();
  Reader r(j, "config");
  int schema = kSchemaVersion;
  r.get("schema_version", schema);
  if (schema != kSchemaVersion) {
    throw Error(ErrorCode::kConfig, "config.schema_version " + std::to_string(schema) + " is not supported");
  }
  r.get("seed", c.seed);
  std::string out = c.output_dir.string();
  r.get("output_dir", out);
  c.output_dir = out;
  if (const Json* s = r.child("scenarios")) {
    if (!s->is_array() || s->empty()) throw Error(ErrorCode::kConfig, "config.scenarios must be a non-empty array");
    c.scenarios.clear();
    std::set<std::string> names;
    for (std::size_t i = 0; i < s->size(); ++i) {
      c.scenarios.push_back(scenario_from((*s)[i], "config.scenarios[" + std::to_string(i) + "]"));
      if (!names.insert(c.scenarios.back().name).second) {
        throw Error(ErrorCode::kConfig, "scenario '" + c.scenarios.back().name + "' is listed twice");
      }
    }
  }
  if (const Json* a = r.child("ai")) {
    Reader ar(*a, "config.ai");
    ar.get("hidden_units", c.ai.hidden_units);
    ar.get("epochs", c.ai.epochs);
    ar.get("learning_rate", c.ai.learning_rate);
    ar.finish();
    if (c.ai.hidden_units == 0 || c.ai.epochs == 0 || !(c.ai.learning_rate > 0.0)) {
      throw Error(ErrorCode::kConfig, "config.ai values must be positive");
    }
  }
  if (const Json* cx = r.child("complexities")) {
    const auto names = string_list(*cx, "config.complexities");
    if (names.empty()) throw Error(ErrorCode::kConfig, "config.complexities must be non-empty");
    c.complexities.clear();
    for (const auto& n : names) c.complexities.push_back(parse_complexity(n));
  }
  if (const Json* cd = r.child("conditions")) {
    const auto names = string_list(*cd, "config.conditions");
    if (names.empty()) throw Error(ErrorCode::kConfig, "config.conditions must be non-empty");
    c.conditions.clear();
    for (const auto& n : names) c.conditions.push_back(parse_xai_condition(n));
  }
  if (const Json* s = r.child("session")) {
    Reader sr(*s, "config.session");
    sr.get("n_forward", c.session.n_forward);
    sr.get("n_counterfactual", c.session.n_counterfactual);
    std::string schedule;
    sr.get("schedule", schedule);
    if (!schedule.empty()) c.session.schedule = parse_visibility_schedule(schedule);
    sr.finish();
    c.session.validate();
  }
  r.get("agents_per_cell", c.agents_per_cell);
  if (c.agents_per_cell < 1) throw Error(ErrorCode::kConfig, "config.agents_per_cell must be positive");
  if (const Json* p = r.child("params")) c.params = cognitive_params_from_json(*p);
  if (const Json* ct = r.child("controller")) {
    Reader cr(*ct, "config.controller");
    cr.get("kind", c.controller.kind);
    std::string policy;
    cr.get("policy", policy);
    if (!policy.empty()) c.controller.policy = policy;
    cr.get("deterministic", c.controller.deterministic);
    cr.finish();
    if (c.controller.kind != "myopic" && c.controller.kind != "ppo") {
      throw Error(ErrorCode::kConfig, "config.controller.kind must be myopic or ppo");
    }
  }
  if (const Json* p = r.child("ppo")) c.ppo = ppo_config_from_json(*p);
  if (const Json* f = r.child("fit")) {
    Reader fr(*f, "config.fit");
    fr.get("budget", c.fit.optimizer.budget);
    fr.get("initial", c.fit.optimizer.initial);
    fr.get("candidates", c.fit.optimizer.candidates);
    fr.get("patience", c.fit.optimizer.patience);
    fr.get("min_improvement", c.fit.optimizer.min_improvement);
    fr.get("replays", c.fit.replays);
    fr.get("max_knn", c.fit.max_knn);
    fr.get("shap_samples", c.fit.shap_samples);
    if (const Json* b = fr.child("forward_bounds")) c.fit.forward_bounds = bounds_from(*b, "config.fit.forward_bounds");
    if (const Json* b = fr.child("counterfactual_bounds")) {
      c.fit.counterfactual_bounds = bounds_from(*b, "config.fit.counterfactual_bounds");
    }
    fr.finish();
    if (c.fit.optimizer.budget < 1 || c.fit.optimizer.initial < 1 || c.fit.optimizer.candidates < 1 ||
        c.fit.replays < 1 || c.fit.max_knn < 1 || c.fit.shap_samples < 1 || c.fit.optimizer.patience < 1) {
      throw Error(ErrorCode::kConfig, "config.fit counts must be positive");
    }
  }
  r.get("bootstrap", c.bootstrap);
  if (c.bootstrap < 100) throw Error(ErrorCode::kConfig, "config.bootstrap needs at least 100 resamples");
  r.get("host", c.host);
  r.get("port", c.port);
  if (c.port < 0 || c.port > 65535) throw Error(ErrorCode::kConfig, "config.port is out of range");
  r.finish();
  c.params.validate();
  c.fit.optimizer.seed = c.seed;
  c.ppo.seed = c.seed;
  return c;
}

Json to_json(const RunConfig& c) {
  Json scenarios = Json::array();
  for (const auto& s : c.scenarios) scenarios.push_back(scenario_json(s));
  Json complexities = Json::array();
  for (auto x : c.complexities) complexities.push_back(complexity_name(x));
  Json conditions = Json::array();
  for (auto x : c.conditions) conditions.push_back(xai_condition_name(x));
  Json controller{{"kind", c.controller.kind}, {"deterministic", c.controller.deterministic}};
  if (c.controller.policy) controller["policy"] = *c.controller.policy;
  Json fit{{"budget", c.fit.optimizer.budget},
           {"initial", c.fit.optimizer.initial},
           {"candidates", c.fit.optimizer.candidates},
           {"patience", c.fit.optimizer.patience},
           {"min_improvement", c.fit.optimizer.min_improvement},
           {"replays", c.fit.replays},
           {"max_knn", c.fit.max_knn},
           {"shap_samples", c.fit.shap_samples}};
  if (!c.fit.forward_bounds.empty()) fit["forward_bounds"] = bounds_json(c.fit.forward_bounds);
  if (!c.fit.counterfactual_bounds.empty()) fit["counterfactual_bounds"] = bounds_json(c.fit.counterfactual_bounds);
  Json ppo = to_json(c.ppo);
  ppo.erase("seed");
  return Json{{"schema_version", kSchemaVersion},
              {"seed", c.seed},
              {"output_dir", c.output_dir.string()},
              {"scenarios", scenarios},
              {"ai", {{"hidden_units", c.ai.hidden_units}, {"epochs", c.ai.epochs}, {"learning_rate", c.ai.learning_rate}}},
              {"complexities", complexities},
              {"conditions", conditions},
              {"session",
               {{"n_forward", c.session.n_forward},
                {"n_counterfactual", c.session.n_counterfactual},
                {"schedule", visibility_schedule_name(c.session.schedule)}}},
              {"agents_per_cell", c.agents_per_cell},
              {"params", to_json(c.params)},
              {"controller", controller},
              {"ppo", ppo},
              {"fit", fit},
              {"bootstrap", c.bootstrap},
              {"host", c.host},
              {"port", c.port}};
}

RunConfig load_run_config(const std::string& path) {
  Json j;
  try {
    j = read_json_file(path);
  } catch (const Error& e) {
    throw Error(e.code() == ErrorCode::kNotFound ? ErrorCode::kConfig : e.code(),
                std::string("cannot load config: ") + e.what());
  }
  return run_config_from_json(j);
}

std::filesystem::path resolve_output_dir(const RunConfig& c) {
  if (c.output_dir.is_absolute()) return c.output_dir;
  const char* root = std::getenv(kOutputRootEnv);
  const std::filesystem::path base = root && *root ? std::filesystem::path(root) : std::filesystem::current_path();
  return (base / c.output_dir).lexically_normal();
}

GridSpec parse_grid(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::kConfig, "grid must look like name=start:stop:count");
  GridSpec g;
  g.parameter = text.substr(0, eq);
  const std::string range = text.substr(eq + 1);
  const auto c1 = range.find(':');
  const auto c2 = c1 == std::string::npos ? std::string::npos : range.find(':', c1 + 1);
  if (c2 == std::string::npos) throw Error(ErrorCode::kConfig, "grid must look like name=start:stop:count");
  double start = 0.0, stop = 0.0;
  long count = 0;
  try {
    std::size_t used = 0;
    start = std::stod(range.substr(0, c1), &used);
    if (used != c1) throw std::invalid_argument("start");
    const std::string s2 = range.substr(c1 + 1, c2 - c1 - 1);
    stop = std::stod(s2, &used);
    if (used != s2.size()) throw std::invalid_argument("stop");
    const std::string s3 = range.substr(c2 + 1);
    count = std::stol(s3, &used);
    if (used != s3.size()) throw std::invalid_argument("count");
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfig, "grid '" + text + "' has a malformed number");
  }
  if (count < 1 || count > 10'000) throw Error(ErrorCode::kConfig, "grid count must be between 1 and 10000");
  CognitiveParams probe;
  set_parameter(probe, g.parameter, start);
  for (long i = 0; i < count; ++i) {
    g.values.push_back(count == 1 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  return g;
}

void set_parameter(CognitiveParams& p, const std::string& name, double value) {
  if (name == "kappa") {
    p.kappa = value;
  } else if (name == "gamma") {
    p.gamma = value;
  } else if (name == "nu") {
    p.nu = value;
  } else if (name == "epsilon") {
    p.epsilon = value;
  } else if (name == "zeta") {
    p.zeta = value;
  } else {
    throw Error(ErrorCode::kConfig, "unknown sweep parameter '" + name + "' (kappa, gamma, nu, epsilon, zeta)");
  }
}

}  // namespace coxam::cli
