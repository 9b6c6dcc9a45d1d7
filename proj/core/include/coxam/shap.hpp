#pragma once

#include <functional>
#include <span>
#include <string>

#include "coxam/common.hpp"

namespace coxam {

using ScalarModel = std::function<double(const Instance&)>;

/// Interventional Shapley values by enumerating all 2^6 coalitions; the value of a coalition S
/// is the mean of f(x_S, b_rest) over the background rows b. Throws kPrecondition on an empty
/// background.
Instance exact_shapley(const ScalarModel& f, const Instance& x, std::span<const Instance> background);

/// Permutation-sampling estimate of the same values: each sample draws a random attribute order and
/// one background row (rows are cycled through a shuffled order so every row is used evenly).
Instance sampled_shapley(const ScalarModel& f, const Instance& x, std::span<const Instance> background,
                         int n_samples, Rng& rng);

struct GlobalShap {
  /// Mean |attribution| per attribute over the explained instances.
  Instance importance{};
  /// Importance normalized to sum 1; uniform when every importance is 0.
  Instance selection{};
  /// Largest coefficient of variation of an importance across the independent repeats.
  double max_cv = 0.0;
  /// Set when max_cv exceeds 10%: n_samples is too small for stable importances.
  bool unstable = false;
  std::string warning;
};

/// Global importance of each attribute to `f`, averaged over `repeats` independent Monte Carlo runs.
GlobalShap global_shap(const ScalarModel& f, std::span<const Instance> instances, std::span<const Instance> background,
                       int n_samples, Rng& rng, int repeats = 3);

}  // namespace coxam
