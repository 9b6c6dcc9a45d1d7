#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "coxam/fitting.hpp"
#include "coxam/ppo.hpp"

namespace coxam::cli {

/// Relative output directories resolve against this variable when it is set.
inline constexpr const char* kOutputRootEnv = "COXAM_OUTPUT_ROOT";

struct ScenarioConfig {
  std::string name;
  /// Either a CSV path or a synthetic generator name.
  std::optional<std::string> csv;
  std::optional<std::string> synthetic;
  std::size_t n_rows = 1200;
  /// Empty selects the six attributes with the highest mutual information.
  std::vector<std::string> attributes;
  TargetRule target;
  char delimiter = ',';
};

struct ControllerConfig {
  std::string kind = "myopic";  // myopic | ppo
  /// Policy checkpoint; defaults to models/policy.json under the output directory.
  std::optional<std::string> policy;
  bool deterministic = false;
};

struct FitConfig {
  OptimizerConfig optimizer;
  int replays = 32;
  /// Per target, three (low, high) pairs; empty uses the defaults.
  std::vector<std::pair<double, double>> forward_bounds;
  std::vector<std::pair<double, double>> counterfactual_bounds;
  int max_knn = 15;
  int shap_samples = 200;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "coxam-out";
  std::vector<ScenarioConfig> scenarios;
  TrainConfig ai;
  std::vector<Complexity> complexities{Complexity::kHigh};
  std::vector<XaiCondition> conditions{XaiCondition::kWeights, XaiCondition::kRules, XaiCondition::kHybrid};
  SessionConfig session;
  int agents_per_cell = 50;
  CognitiveParams params;
  ControllerConfig controller;
  PpoConfig ppo;
  FitConfig fit;
  int bootstrap = 10'000;
  std::string host = "127.0.0.1";
  int port = 8080;
};

/// Defaults: synthetic wine and mushroom scenarios, every schema, 50 agents per cell.
RunConfig default_run_config();

/// Parses and validates; unknown keys anywhere are rejected with kConfig naming the key path.
RunConfig run_config_from_json(const Json& j);
Json to_json(const RunConfig& c);
RunConfig load_run_config(const std::string& path);

/// output_dir, made absolute against $COXAM_OUTPUT_ROOT (or the working directory).
std::filesystem::path resolve_output_dir(const RunConfig& c);

/// One parameter sweep: `name=start:stop:count` with count evenly spaced points, ends included.
struct GridSpec {
  std::string parameter;
  std::vector<double> values;
};
GridSpec parse_grid(const std::string& text);

/// Applies `value` to the named cognitive parameter; throws kConfig for an unknown name.
void set_parameter(CognitiveParams& p, const std::string& name, double value);

}  // namespace coxam::cli
