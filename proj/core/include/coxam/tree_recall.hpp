#pragma once

#include <optional>
#include <vector>

#include "coxam/context.hpp"

namespace coxam {

struct TracedNode {
  int node_id = 0;
  std::size_t attribute = 0;
  double threshold = 0.0;
  Branch branch = Branch::kLeft;
};

/// A root-to-leaf walk, read from screen or recalled from memory.
struct TreeWalk {
  std::vector<TracedNode> nodes;
  std::optional<Label> leaf_label;
  std::optional<int> leaf_id;
  /// Set when a recall failed before a leaf was reached.
  bool failed = false;
  int n_reads = 0;
  std::vector<TraceStep> trace;
};

/// Reads the shown tree along the instance's path. Each node costs two reads (value and
/// threshold) and encodes the node's chunks; the clock advances one second per read.
TreeWalk read_tree_walk(const RuleTree& tree, const TrialContext& ctx);

/// Recalls the tree from memory: the node's attribute (or leaf label), its threshold, then the
/// outgoing branch. Every recall and every value read costs one second.
TreeWalk recall_tree_walk(const TrialContext& ctx, Rng& rng, int max_nodes = 8);

/// Noise-free planning counterpart of recall_tree_walk; no memory side effects.
struct TreeWalkForecast {
  TreeWalk walk;
  /// Probability that every recall on the walk clears the threshold.
  double probability = 0.0;
  int n_recalls = 0;
};
TreeWalkForecast forecast_tree_walk(const TrialContext& ctx, const Instance& x, int max_nodes = 8);

/// Encodes every chunk describing the tree (tutorial study and feedback review).
void encode_tree(MemoryStore& memory, const RuleTree& tree, const AttributeSpecs& attributes);
/// Encodes the chunks along one path (feedback highlight).
void encode_tree_path(MemoryStore& memory, const RuleTree& tree, const AttributeSpecs& attributes,
                      const Instance& x);

}  // namespace coxam
