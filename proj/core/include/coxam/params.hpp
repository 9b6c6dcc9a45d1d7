#pragma once

#include "coxam/common.hpp"
#include "coxam/memory.hpp"

namespace coxam {

/// Per-agent cognitive parameters. `nu` drives forward choices, `epsilon` counterfactual edits.
struct CognitiveParams {
  /// Retrieval threshold.
  double kappa = -1.0;
  /// Opportunity cost per second of reasoning.
  double gamma = 0.02;
  /// Diffusion noise.
  double nu = 1.0;
  /// Edit margin as a fraction of the attribute range.
  double epsilon = 0.05;
  /// Activation noise scale.
  double zeta = 0.3;
  double lapse = kLapseRate;
  /// Spread of the depth preference of threshold crossing, in levels.
  double depth_sd = 0.5;

  /// Throws kValidation naming the offending field.
  void validate() const;
  RetrievalParams retrieval() const { return {kappa, zeta}; }
};

}  // namespace coxam
