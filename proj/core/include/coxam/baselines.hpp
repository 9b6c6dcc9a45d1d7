#pragma once

#include <span>
#include <vector>

#include "coxam/fitting.hpp"
#include "coxam/shap.hpp"

namespace coxam {

/// BIC parameter counts per model.
inline constexpr int kCoxamParams = 3;
inline constexpr int kProxyParams = 1;
inline constexpr int kKnnParams = 2;
inline constexpr int kRandomParams = 0;

/// -sum ln P(observed) that tolerates p in {0, 1}: a certain correct answer costs 0 and a certain
/// wrong one +inf.
double nll_forward_unchecked(std::span<const double> p_positive, std::span<const Label> responses);

/// Forward records' observed labels, in log order. Throws kPrecondition on a missing label.
std::vector<Label> forward_responses(std::span<const TrialRecord> records);

/// p = 0.5 on every forward record.
std::vector<double> baseline_random_forward(std::span<const TrialRecord> records);

enum class ProxyKind { kTree, kLinear };

/// p = (1 - s) 1[surrogate says +1] + s / 2 on every forward record, using the displayed
/// surrogate. Throws kPrecondition when s is outside [0, 1] or the task lacks that surrogate.
std::vector<double> baseline_proxy(const TaskModels& task, ProxyKind kind, std::span<const TrialRecord> records,
                                   double smoothing);

/// Feedback a participant has seen before each forward record: for record t, the instances
/// and AI labels released on records 0..t-1.
std::vector<std::vector<std::pair<Instance, Label>>> released_before(std::span<const TrialRecord> records);

/// Incremental nearest-neighbour predictor: record t votes among the released examples before it
/// (Euclidean on range-normalized attributes, ties broken by release order), p = (1 - s) vote + s / 2;
/// 0.5 before any feedback.
std::vector<double> baseline_knn(const TaskModels& task, std::span<const TrialRecord> records, int k_neighbors,
                                 double smoothing);

struct BaselineFit {
  ModelScore score;
  double smoothing = 0.0;
  int k_neighbors = 0;
  std::vector<double> p_positive;
};

/// Smoothing chosen on the 0.001 grid over [0, 1] by exhaustive search.
BaselineFit fit_proxy(const TaskModels& task, ProxyKind kind, std::span<const TrialRecord> records);
/// Neighbour count 1..max_k and smoothing on the 0.001 grid.
BaselineFit fit_knn(const TaskModels& task, std::span<const TrialRecord> records, int max_k = 15);
BaselineFit score_random_forward(std::span<const TrialRecord> records);

/// Counterfactual baselines score the chosen attribute only, lapse-mixed like every model.
ModelScore score_random_selection(std::span<const TrialRecord> records);
ModelScore score_shap_selection(const Instance& selection, std::span<const TrialRecord> records);

/// The four forward baselines in report order: Random, Decision Tree, Linear, KNN. Proxies whose
/// surrogate the task lacks are skipped.
std::vector<BaselineFit> forward_baselines(const TaskModels& task, std::span<const TrialRecord> records);

}  // namespace coxam
