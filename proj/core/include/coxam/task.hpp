#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "coxam/context.hpp"
#include "coxam/trial_pool.hpp"

namespace coxam {

enum class Complexity { kLow, kHigh };

std::string_view complexity_name(Complexity c);
Complexity parse_complexity(std::string_view name);

/// Tree depth 2 or 3 and 3 or 6 non-zero factors.
inline int tree_depth_for(Complexity c) { return c == Complexity::kLow ? 2 : 3; }
inline int nonzero_factors_for(Complexity c) { return c == Complexity::kLow ? 3 : 6; }

/// A fully built task: data, AI, full-precision surrogates and what participants see.
struct Task {
  std::string scenario;
  Complexity complexity = Complexity::kHigh;
  std::optional<Dataset> dataset;
  WeightModel weights_full;
  RuleTree tree_full;
  /// Display-precision explanations, as agents and participants see them.
  TaskModels models;

  Classifier ai_classifier() const;
  Classifier weights_classifier() const;
  Classifier tree_classifier() const;
};

struct TaskConfig {
  std::string scenario = "wine";
  Complexity complexity = Complexity::kHigh;
  std::size_t n_rows = 1200;
  std::uint64_t seed = 1;
  TrainConfig ai;
};

/// Builds a task on a synthetic stand-in for the scenario.
Task build_task(const TaskConfig& config);

/// Builds a task from an already ingested dataset.
Task build_task(Dataset dataset, const std::string& scenario, Complexity complexity,
                const TrainConfig& ai_config);

/// Assembles a task from stored models (for artifact round-trips).
Task assemble_task(std::string scenario, Complexity complexity, AttributeSpecs attributes, AiModel ai,
                   WeightModel weights, RuleTree tree);

/// Selects balanced, fidelity-controlled instances against the surrogates the condition uses,
/// searching the test split first and the whole dataset when the test split is infeasible.
TrialPool select_task_instances(const Task& task, XaiCondition condition, std::size_t n, std::uint64_t seed,
                                const std::vector<Instance>* exclude = nullptr);

}  // namespace coxam
