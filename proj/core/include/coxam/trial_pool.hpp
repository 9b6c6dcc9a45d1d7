#pragma once

#include <cstdint>
#include <vector>

#include "coxam/surrogates.hpp"

namespace coxam {

inline constexpr double kTrialFidelity = 0.9;

struct TrialPool {
  std::vector<Instance> instances;
  std::vector<Label> ai_labels;
  /// Label of the first surrogate passed to selection (all surrogates agree or all disagree).
  std::vector<Label> surrogate_labels;
  double balance = 0.0;
  double fidelity = 0.0;

  std::size_t size() const { return instances.size(); }
};

/// Picks exactly `n` instances with n/2 per AI label and exactly fidelity*n instances where the
/// surrogates agree with the AI, disagreements split across both classes. With several
/// surrogates, an instance "agrees" only when every surrogate agrees and "disagrees" only when
/// every surrogate disagrees. Throws kInfeasible naming the quota that cannot be met.
TrialPool select_trial_instances(const Classifier& ai, const std::vector<Classifier>& surrogates,
                                 const std::vector<Instance>& pool, std::size_t n,
                                 std::uint64_t seed, double target_fidelity = kTrialFidelity);

}  // namespace coxam
