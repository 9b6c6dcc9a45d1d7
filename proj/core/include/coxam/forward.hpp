#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coxam/context.hpp"
#include "coxam/ddm.hpp"

namespace coxam {

struct ForwardResult {
  /// Lapse-mixed probability of answering +1.
  double p_positive = 0.5;
  /// Signed toward +1.
  double evidence = 0.0;
  int n_reads = 0;
  int n_calcs = 0;
  double execution_time = 0.0;
  double total_time = 0.0;
  bool guessed = false;
  /// w_r x_r (or omega_r z_r) per attribute that entered the sum.
  std::array<std::optional<double>, kNumAttributes> partial_sums{};
  std::vector<TraceStep> trace;
};

struct EvidenceTerm {
  double factor = 0.0;
  double value = 0.0;
};

/// (b + sum w x) / (|b| + sum |w x|); 0 when the denominator vanishes.
double ratio_evidence(std::span<const EvidenceTerm> terms, double intercept = 0.0);

/// Multiplies selected values by factors (shown, or recalled when hidden) and sums them.
/// Attributes whose factor cannot be recalled are dropped from the sum.
ForwardResult approximate_calculation(const TrialContext& ctx, std::span<const std::size_t> subset,
                                      const DdmParams& ddm, Rng& rng);

/// Same ratio, using factors sampled from the mental-factor beliefs on range-centred values.
ForwardResult feature_attribution(const TrialContext& ctx, std::span<const std::size_t> subset,
                                  const DdmParams& ddm, Rng& rng);

/// Walks the rule tree from the root, reading it when shown or recalling it node by node.
/// Evidence is the summed range-normalized distance to each traced threshold, signed by the
/// reached leaf. A recall failure stops the walk and yields a guess.
ForwardResult ata_traversal(const TrialContext& ctx, const DdmParams& ddm, Rng& rng);

/// One Laplace-approximate Bayesian step per attribute for a logistic observation model.
/// `p` is the predicted probability of the positive class; `y` is 1 for +1 and 0 for -1.
void update_mental_factors(Instance& mu, Instance& sigma, const Instance& x, double p, int y);

}  // namespace coxam
