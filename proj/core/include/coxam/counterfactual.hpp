#pragma once

#include <vector>

#include "coxam/context.hpp"

namespace coxam {

/// A single-attribute change. `new_value` is clamped to the attribute range.
struct Edit {
  std::size_t attribute = 0;
  double old_value = 0.0;
  double delta = 0.0;
  double new_value = 0.0;
  bool clamped = false;

  Instance apply(const Instance& x) const;
};

/// Builds the edit x_r -> x_r + delta, clamping to the attribute range.
Edit make_edit(const AttributeSpecs& specs, const Instance& x, std::size_t attribute, double delta);

struct WeightedEdit {
  Edit edit;
  double probability = 0.0;
};

struct EditDistribution {
  std::vector<WeightedEdit> edits;
  int n_reads = 0;
  int n_calcs = 0;
  /// Availability heuristic only: no remembered edit was reused.
  bool cold_start = false;
  std::vector<TraceStep> trace;

  bool empty() const { return edits.empty(); }
  /// Rescales probabilities to sum to one; throws kInvariant when the mass is zero.
  void normalize();
  const Edit& sample(Rng& rng) const;
  /// Marginal probability of editing each attribute.
  Instance attribute_probabilities() const;
  double time_cost() const;
};

/// -S/w - sign(S/w) * margin: reaches the boundary of the linear score and overshoots it.
/// S = 0 counts as the positive side.
double inverse_edit_delta(double score, double factor, double margin);

/// Moves `value` across `threshold` to the opposite branch, landing `margin` beyond it.
double threshold_crossing_delta(double value, double threshold, double margin);

/// Discrete truncated Normal over depths 0..n_depths-1 centred at `preferred`; a
/// non-positive `sd` puts all mass on the depth nearest `preferred`.
std::vector<double> depth_weights(int n_depths, double preferred, double sd);

/// Margins are fractions of the attribute range.
struct MarginParams {
  double epsilon = 0.05;
};

/// Candidate edits of the linear score b + w.x, weighted by |w_r|. Zero factors are skipped.
std::vector<WeightedEdit> inverse_weight_edits(const AttributeSpecs& specs, const Instance& x,
                                               const WeightModel& weights, const MarginParams& margin);

/// Candidate edits of the centred-scale score omega.z, weighted by |omega_r|.
std::vector<WeightedEdit> inverse_belief_edits(const AttributeSpecs& specs, const Instance& x,
                                               const Instance& omega, const MarginParams& margin,
                                               std::optional<Label> target = std::nullopt);

struct CrossingNode {
  std::size_t attribute = 0;
  double threshold = 0.0;
};

/// One crossing edit per traced node, weighted by depth preference.
std::vector<WeightedEdit> crossing_edits(const AttributeSpecs& specs, const Instance& x,
                                         const std::vector<CrossingNode>& trace, double depth_preference,
                                         double depth_sd, const MarginParams& margin);

/// Requires the Weights explanation on screen. Selects attribute r with probability
/// proportional to |w_r| and solves the linear score for the crossing value.
EditDistribution inverse_calculation(const TrialContext& ctx, const MarginParams& margin);

/// As inverse_calculation, with factors sampled from the mental-factor beliefs on
/// range-centred values. Works with or without the explanation.
EditDistribution inverse_feature_attribution(const TrialContext& ctx, const MarginParams& margin,
                                             Rng& rng, std::optional<Label> target = std::nullopt);

/// Traces the instance through the tree (read when shown, recalled otherwise, truncated at a
/// failed recall) and crosses the threshold of one traced node chosen by depth preference.
/// Yields an empty distribution when not even the root was recalled.
EditDistribution node_threshold_crossing(const TrialContext& ctx, double depth_preference,
                                         double depth_sd, const MarginParams& margin, Rng& rng);

/// Replays a remembered edit for the same target class; otherwise a uniform attribute gets a
/// uniform value within its range.
EditDistribution availability_heuristic(const TrialContext& ctx, Label target, Rng& rng);

/// Stores the edit as an availability chunk for `target` at the memory clock.
void record_edit(MemoryStore& memory, Label target, const Edit& edit);

}  // namespace coxam
