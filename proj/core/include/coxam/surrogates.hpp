#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "coxam/ai_model.hpp"
#include "coxam/common.hpp"
#include "coxam/dataset.hpp"

namespace coxam {

using Classifier = std::function<Label(const Instance&)>;

enum class Branch { kLeft, kRight };

/// Thresholded binary tree. Left is taken when x < threshold, right when x >= threshold.
struct RuleTree {
  struct Node {
    int id = 0;
    bool leaf = true;
    std::size_t attribute = 0;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    Label label = Label::Positive;
  };

  /// Indexed by node id; the root is node 0.
  std::vector<Node> nodes;
  int depth = 2;

  const Node& node(int id) const;
  const Node& root() const { return node(0); }

  /// Node ids visited from root to leaf, inclusive of the leaf.
  std::vector<int> path(const Instance& x) const;
  Label predict(const Instance& x) const;
  /// Number of internal nodes visited.
  std::size_t trace_length(const Instance& x) const { return path(x).size() - 1; }
  std::size_t leaf_count() const;
  /// Copy with thresholds rounded to three significant figures.
  RuleTree displayed() const;

  /// Throws kStructure when a child is missing or a path exceeds `depth`.
  void validate() const;
};

inline Branch branch_for(double value, double threshold) {
  return value < threshold ? Branch::kLeft : Branch::kRight;
}

/// CART-style induction: Gini impurity, midpoint thresholds, majority-label leaves.
RuleTree fit_tree(const std::vector<Instance>& rows, const std::vector<Label>& labels, int depth);

/// Fits a tree of `depth` (2 or 3) to the AI's labels on the training split.
RuleTree fit_tree_surrogate(const AiModel& ai, const Dataset& dataset, int depth);

/// Intercept plus one factor per attribute; the "Weights" explanation.
struct WeightModel {
  double intercept = 0.0;
  Instance factors{};
  /// Set when a coefficient hit the clamp bound during fitting.
  bool clamped = false;

  double score(const Instance& x) const;
  Label predict(const Instance& x) const { return label_from_sign(score(x)); }
  std::size_t nonzero_count() const;
  /// Copy rounded to three significant figures for display.
  WeightModel displayed() const;
};

struct LinearFitConfig {
  std::size_t iterations = 3000;
  double learning_rate = 0.5;
  double l2 = 1e-4;
  double clamp_bound = 50.0;
};

/// Logistic regression by full-batch gradient descent. `mask` selects the attributes allowed
/// to carry a factor.
WeightModel fit_logistic(const std::vector<Instance>& rows, const std::vector<Label>& labels,
                         const std::array<bool, kNumAttributes>& mask,
                         const LinearFitConfig& config = {});

/// Fits to the AI's labels; with k_nonzero = 3 the three largest standardized factors are kept
/// and refit, the rest zeroed.
WeightModel fit_linear_surrogate(const AiModel& ai, const Dataset& dataset, int k_nonzero,
                                 const LinearFitConfig& config = {});

double fidelity(const Classifier& surrogate, const Classifier& reference,
                const std::vector<Instance>& rows);

}  // namespace coxam
