#include "coxam/task.hpp"

#include <algorithm>

namespace coxam {

std::string_view complexity_name(Complexity c) { return c == Complexity::kLow ? "low" : "high"; }

Complexity parse_complexity(std::string_view name) {
  if (name == "low") return Complexity::kLow;
  if (name == "high") return Complexity::kHigh;
  throw Error(ErrorCode::kValidation, "unknown complexity '" + std::string(name) + "'");
}

Classifier Task::ai_classifier() const {
  return [this](const Instance& x) { return models.ai.predict(x); };
}

Classifier Task::weights_classifier() const {
  return [this](const Instance& x) { return weights_full.predict(x); };
}

Classifier Task::tree_classifier() const {
  return [this](const Instance& x) { return tree_full.predict(x); };
}

Task assemble_task(std::string scenario, Complexity complexity, AttributeSpecs attributes, AiModel ai,
                   WeightModel weights, RuleTree tree) {
  validate_specs(attributes);
  tree.validate();
  Task task;
  task.scenario = std::move(scenario);
  task.complexity = complexity;
  task.weights_full = weights;
  task.tree_full = tree;
  task.models.attributes = attributes;
  task.models.ai = std::move(ai);
  task.models.weights = weights;
  task.models.tree = tree;
  task.models.to_display_precision();
  return task;
}

Task build_task(Dataset dataset, const std::string& scenario, Complexity complexity,
                const TrainConfig& ai_config) {
  AiModel ai = train_ai(dataset, ai_config);
  WeightModel weights = fit_linear_surrogate(ai, dataset, nonzero_factors_for(complexity));
  RuleTree tree = fit_tree_surrogate(ai, dataset, tree_depth_for(complexity));
  Task task = assemble_task(scenario, complexity, dataset.attributes(), std::move(ai), weights, tree);
  task.dataset.emplace(std::move(dataset));
  return task;
}

Task build_task(const TaskConfig& config) {
  const auto kind = parse_synthetic_kind(config.scenario);
  if (!kind) throw Error(ErrorCode::kConfig, "unknown scenario '" + config.scenario + "'");
  TrainConfig ai = config.ai;
  ai.seed = derive_seed(config.seed, 11);
  return build_task(make_synthetic_dataset(*kind, config.n_rows, config.seed), config.scenario,
                    config.complexity, ai);
}

TrialPool select_task_instances(const Task& task, XaiCondition condition, std::size_t n, std::uint64_t seed,
                                const std::vector<Instance>* exclude) {
  if (!task.dataset) {
    throw Error(ErrorCode::kPrecondition, "task has no dataset; run `coxam ingest` or use a synthetic scenario");
  }
  std::vector<Classifier> surrogates;
  if (has_weights(condition)) surrogates.push_back(task.weights_classifier());
  if (has_rules(condition)) surrogates.push_back(task.tree_classifier());
  const auto filtered = [&](std::vector<Instance> rows) {
    if (!exclude) return rows;
    std::erase_if(rows, [&](const Instance& x) {
      return std::find(exclude->begin(), exclude->end(), x) != exclude->end();
    });
    return rows;
  };
  try {
    return select_trial_instances(task.ai_classifier(), surrogates, filtered(task.dataset->test_rows()), n, seed);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInfeasible) throw;
  }
  return select_trial_instances(task.ai_classifier(), surrogates, filtered(task.dataset->rows()), n, seed);
}

}  // namespace coxam
