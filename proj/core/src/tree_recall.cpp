#include "coxam/tree_recall.hpp"

#include <cmath>

#include "coxam/ddm.hpp"

namespace coxam {
namespace {

const char* branch_name(Branch b) { return b == Branch::kLeft ? "Left" : "Right"; }

Cue identity_cue(int node_id) {
  return {{ChunkType::kNodeAttribute, ChunkType::kLeafLabel}, {{slot::kNodeId, static_cast<double>(node_id)}}};
}

Cue threshold_cue(int node_id, const std::string& attribute) {
  return {{ChunkType::kNodeThreshold},
          {{slot::kNodeId, static_cast<double>(node_id)}, {slot::kAttribute, attribute}}};
}

Cue child_cue(int node_id, Branch branch) {
  return {{ChunkType::kNodeChild},
          {{slot::kNodeId, static_cast<double>(node_id)}, {slot::kBranch, std::string(branch_name(branch))}}};
}

void encode_node(MemoryStore& memory, const RuleTree::Node& n, const AttributeSpecs& attributes) {
  if (n.leaf) {
    memory.encode(ChunkType::kLeafLabel, leaf_label_chunk(n.id, n.label));
    return;
  }
  const auto& name = attributes[n.attribute].name;
  memory.encode(ChunkType::kNodeAttribute, node_attribute_chunk(n.id, name));
  memory.encode(ChunkType::kNodeThreshold, node_threshold_chunk(n.id, name, n.threshold));
}

void encode_child(MemoryStore& memory, const RuleTree::Node& n, Branch b) {
  memory.encode(ChunkType::kNodeChild,
                node_child_chunk(n.id, branch_name(b), b == Branch::kLeft ? n.left : n.right));
}

}  // namespace

TreeWalk read_tree_walk(const RuleTree& tree, const TrialContext& ctx) {
  TreeWalk walk;
  MemoryStore& memory = *ctx.memory;
  const Instance x = displayed(ctx.instance);
  int id = 0;
  for (std::size_t guard = 0; guard <= tree.nodes.size(); ++guard) {
    const RuleTree::Node& n = tree.node(id);
    encode_node(memory, n, ctx.attributes());
    if (n.leaf) {
      walk.leaf_label = n.label;
      walk.leaf_id = n.id;
      walk.trace.push_back({TraceStep::Kind::kRead, "leaf label", static_cast<double>(to_int(n.label)), n.id});
      return walk;
    }
    const double value = x[n.attribute];
    walk.trace.push_back({TraceStep::Kind::kRead, ctx.attributes()[n.attribute].name, value, n.id});
    walk.trace.push_back({TraceStep::Kind::kRead, "threshold", n.threshold, n.id});
    memory.advance(2.0 * kSecondsPerRead);
    walk.n_reads += 2;
    const Branch b = branch_for(value, n.threshold);
    walk.trace.push_back({TraceStep::Kind::kCompare, branch_name(b), value - n.threshold, n.id});
    encode_child(memory, n, b);
    walk.nodes.push_back({n.id, n.attribute, n.threshold, b});
    id = b == Branch::kLeft ? n.left : n.right;
    if (id < 0) throw Error(ErrorCode::kStructure, "node " + std::to_string(n.id) + " lacks a child");
  }
  throw Error(ErrorCode::kStructure, "tree walk did not reach a leaf");
}

TreeWalk recall_tree_walk(const TrialContext& ctx, Rng& rng, int max_nodes) {
  TreeWalk walk;
  MemoryStore& memory = *ctx.memory;
  const Instance x = displayed(ctx.instance);
  const auto fail = [&](const std::string& what, int node) {
    walk.failed = true;
    walk.trace.push_back({TraceStep::Kind::kRetrievalFailure, what, 0.0, node});
  };
  const auto recall = [&](const Cue& cue) {
    const auto r = retrieve(memory, cue, ctx.retrieval, rng);
    memory.advance(kSecondsPerRead);
    ++walk.n_reads;
    return r;
  };

  int id = 0;
  for (int step = 0; step < max_nodes; ++step) {
    const auto identity = recall(identity_cue(id));
    if (!identity.success()) {
      fail("node", id);
      return walk;
    }
    const Chunk& ident = memory.chunk(*identity.chunk);
    if (ident.type == ChunkType::kLeafLabel) {
      const Label label = label_from_sign(slot_number(ident, slot::kLabel));
      walk.leaf_label = label;
      walk.leaf_id = id;
      walk.trace.push_back({TraceStep::Kind::kRetrieval, "leaf label", static_cast<double>(to_int(label)), id});
      return walk;
    }
    const std::string attribute = slot_text(ident, slot::kAttribute);
    walk.trace.push_back({TraceStep::Kind::kRetrieval, "attribute " + attribute, 0.0, id});
    const auto attr_index = ctx.task->attribute_index(attribute);
    if (!attr_index) {
      fail("unknown attribute", id);
      return walk;
    }
    const double value = x[*attr_index];
    memory.advance(kSecondsPerRead);
    ++walk.n_reads;
    walk.trace.push_back({TraceStep::Kind::kRead, attribute, value, id});

    const auto thr = recall(threshold_cue(id, attribute));
    if (!thr.success()) {
      fail("threshold", id);
      return walk;
    }
    const double threshold = slot_number(memory.chunk(*thr.chunk), slot::kThreshold);
    walk.trace.push_back({TraceStep::Kind::kRetrieval, "threshold", threshold, id});
    const Branch b = branch_for(value, threshold);
    walk.trace.push_back({TraceStep::Kind::kCompare, branch_name(b), value - threshold, id});

    const auto child = recall(child_cue(id, b));
    if (!child.success()) {
      fail("child", id);
      return walk;
    }
    walk.nodes.push_back({id, *attr_index, threshold, b});
    id = static_cast<int>(slot_number(memory.chunk(*child.chunk), slot::kChildNodeId));
    walk.trace.push_back({TraceStep::Kind::kRetrieval, "child", static_cast<double>(id), walk.nodes.back().node_id});
  }
  fail("walk exceeded the node budget", id);
  return walk;
}

TreeWalkForecast forecast_tree_walk(const TrialContext& ctx, const Instance& raw_x, int max_nodes) {
  TreeWalkForecast out;
  out.probability = 1.0;
  const MemoryStore& memory = *ctx.memory;
  const Instance x = displayed(raw_x);
  const auto recall = [&](const Cue& cue) {
    const auto f = forecast_retrieval(memory, cue, ctx.retrieval);
    out.probability *= f.probability;
    ++out.n_recalls;
    ++out.walk.n_reads;
    return f.chunk;
  };
  int id = 0;
  for (int step = 0; step < max_nodes; ++step) {
    const auto identity = recall(identity_cue(id));
    if (!identity) break;
    const Chunk& ident = memory.chunk(*identity);
    if (ident.type == ChunkType::kLeafLabel) {
      out.walk.leaf_label = label_from_sign(slot_number(ident, slot::kLabel));
      out.walk.leaf_id = id;
      return out;
    }
    const auto attr_index = ctx.task->attribute_index(slot_text(ident, slot::kAttribute));
    if (!attr_index) break;
    ++out.walk.n_reads;
    const auto thr = recall(threshold_cue(id, slot_text(ident, slot::kAttribute)));
    if (!thr) break;
    const double threshold = slot_number(memory.chunk(*thr), slot::kThreshold);
    const Branch b = branch_for(x[*attr_index], threshold);
    const auto child = recall(child_cue(id, b));
    if (!child) break;
    out.walk.nodes.push_back({id, *attr_index, threshold, b});
    id = static_cast<int>(slot_number(memory.chunk(*child), slot::kChildNodeId));
  }
  out.walk.failed = true;
  out.probability = 0.0;
  return out;
}

void encode_tree(MemoryStore& memory, const RuleTree& tree, const AttributeSpecs& attributes) {
  for (const auto& n : tree.nodes) {
    encode_node(memory, n, attributes);
    if (!n.leaf) {
      encode_child(memory, n, Branch::kLeft);
      encode_child(memory, n, Branch::kRight);
    }
  }
}

void encode_tree_path(MemoryStore& memory, const RuleTree& tree, const AttributeSpecs& attributes,
                      const Instance& x) {
  const auto path = tree.path(x);
  for (std::size_t i = 0; i < path.size(); ++i) {
    const auto& n = tree.node(path[i]);
    encode_node(memory, n, attributes);
    if (!n.leaf) encode_child(memory, n, branch_for(x[n.attribute], n.threshold));
  }
}

}  // namespace coxam
