#include "coxam/surrogates.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace coxam {
namespace {

double gini(double pos, double total) {
  if (total <= 0.0) return 0.0;
  const double p = pos / total;
  return 2.0 * p * (1.0 - p);
}

Label majority(const std::vector<std::size_t>& idx, const std::vector<Label>& labels) {
  std::size_t pos = 0;
  for (auto i : idx) pos += labels[i] == Label::Positive;
  return 2 * pos >= idx.size() ? Label::Positive : Label::Negative;
}

struct Split {
  std::size_t attribute = 0;
  double threshold = 0.0;
  double impurity = 0.0;
};

std::optional<Split> best_split(const std::vector<Instance>& rows, const std::vector<Label>& labels,
                                const std::vector<std::size_t>& idx) {
  const double n = static_cast<double>(idx.size());
  double pos_total = 0.0;
  for (auto i : idx) pos_total += labels[i] == Label::Positive;
  const double parent = gini(pos_total, n);
  if (parent == 0.0) return std::nullopt;

  std::optional<Split> best;
  std::vector<std::size_t> sorted(idx);
  for (std::size_t a = 0; a < kNumAttributes; ++a) {
    std::sort(sorted.begin(), sorted.end(),
              [&](std::size_t l, std::size_t r) { return rows[l][a] < rows[r][a]; });
    double pos_left = 0.0;
    for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
      pos_left += labels[sorted[k]] == Label::Positive;
      const double v = rows[sorted[k]][a];
      const double next = rows[sorted[k + 1]][a];
      if (!(v < next)) continue;
      const double n_left = static_cast<double>(k + 1);
      const double n_right = n - n_left;
      const double impurity = (n_left * gini(pos_left, n_left) +
                               n_right * gini(pos_total - pos_left, n_right)) / n;
      if (!best || impurity < best->impurity - 1e-12) {
        best = Split{a, 0.5 * (v + next), impurity};
      }
    }
  }
  if (!best || best->impurity >= parent - 1e-12) return std::nullopt;
  return best;
}

}  // namespace

const RuleTree::Node& RuleTree::node(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes.size()) {
    throw Error(ErrorCode::kStructure, "tree has no node " + std::to_string(id));
  }
  return nodes[static_cast<std::size_t>(id)];
}

std::vector<int> RuleTree::path(const Instance& x) const {
  std::vector<int> out;
  int id = 0;
  for (;;) {
    const Node& n = node(id);
    out.push_back(id);
    if (n.leaf) return out;
    if (out.size() > nodes.size()) throw Error(ErrorCode::kStructure, "tree contains a cycle");
    id = branch_for(x[n.attribute], n.threshold) == Branch::kLeft ? n.left : n.right;
  }
}

Label RuleTree::predict(const Instance& x) const { return node(path(x).back()).label; }

std::size_t RuleTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.leaf; }));
}

RuleTree RuleTree::displayed() const {
  RuleTree out = *this;
  for (auto& n : out.nodes) {
    if (!n.leaf) n.threshold = round_sig(n.threshold);
  }
  return out;
}

void RuleTree::validate() const {
  if (nodes.empty()) throw Error(ErrorCode::kStructure, "tree has no nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    if (n.id != static_cast<int>(i)) throw Error(ErrorCode::kStructure, "node ids must match positions");
    if (n.leaf) continue;
    if (n.attribute >= kNumAttributes) throw Error(ErrorCode::kStructure, "node attribute out of range");
    for (int child : {n.left, n.right}) {
      if (child <= n.id || static_cast<std::size_t>(child) >= nodes.size()) {
        throw Error(ErrorCode::kStructure,
                    "node " + std::to_string(n.id) + " has a missing or invalid child");
      }
    }
  }
  // Depth bound: breadth-first over (node, internal depth).
  std::deque<std::pair<int, int>> queue{{0, 0}};
  while (!queue.empty()) {
    const auto [id, d] = queue.front();
    queue.pop_front();
    const Node& n = nodes[static_cast<std::size_t>(id)];
    if (n.leaf) continue;
    if (d + 1 > depth) throw Error(ErrorCode::kStructure, "tree deeper than declared depth");
    queue.emplace_back(n.left, d + 1);
    queue.emplace_back(n.right, d + 1);
  }
}

RuleTree fit_tree(const std::vector<Instance>& rows, const std::vector<Label>& labels, int depth) {
  if (depth < 1) throw Error(ErrorCode::kPrecondition, "tree depth must be positive");
  if (rows.empty() || rows.size() != labels.size()) {
    throw Error(ErrorCode::kPrecondition, "tree fitting needs matching, non-empty rows and labels");
  }
  RuleTree tree;
  tree.depth = depth;
  struct Pending {
    int id;
    int level;
    std::vector<std::size_t> idx;
  };
  std::vector<std::size_t> all(rows.size());
  std::iota(all.begin(), all.end(), 0);
  std::deque<Pending> queue;
  tree.nodes.push_back({});
  queue.push_back({0, 0, std::move(all)});
  // Breadth-first growth yields level-ordered node ids.
  while (!queue.empty()) {
    Pending p = std::move(queue.front());
    queue.pop_front();
    RuleTree::Node& n = tree.nodes[static_cast<std::size_t>(p.id)];
    n.id = p.id;
    n.label = majority(p.idx, labels);
    n.leaf = true;
    if (p.level >= depth) continue;
    const auto split = best_split(rows, labels, p.idx);
    if (!split) continue;
    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (auto i : p.idx) {
      (branch_for(rows[i][split->attribute], split->threshold) == Branch::kLeft ? left : right).push_back(i);
    }
    n.leaf = false;
    n.attribute = split->attribute;
    n.threshold = split->threshold;
    n.left = static_cast<int>(tree.nodes.size());
    n.right = n.left + 1;
    const int left_id = n.left;
    const int right_id = n.right;
    tree.nodes.push_back({});
    tree.nodes.push_back({});
    queue.push_back({left_id, p.level + 1, std::move(left)});
    queue.push_back({right_id, p.level + 1, std::move(right)});
  }
  return tree;
}

RuleTree fit_tree_surrogate(const AiModel& ai, const Dataset& dataset, int depth) {
  if (depth != 2 && depth != 3) throw Error(ErrorCode::kPrecondition, "surrogate depth must be 2 or 3");
  const auto rows = dataset.train_rows();
  std::vector<Label> labels;
  labels.reserve(rows.size());
  for (const auto& x : rows) labels.push_back(ai.predict(x));
  return fit_tree(rows, labels, depth);
}

double WeightModel::score(const Instance& x) const {
  double s = intercept;
  for (std::size_t i = 0; i < kNumAttributes; ++i) s += factors[i] * x[i];
  return s;
}

std::size_t WeightModel::nonzero_count() const {
  return static_cast<std::size_t>(
      std::count_if(factors.begin(), factors.end(), [](double w) { return w != 0.0; }));
}

WeightModel WeightModel::displayed() const {
  WeightModel out = *this;
  out.intercept = round_sig(intercept);
  for (auto& w : out.factors) w = round_sig(w);
  return out;
}

WeightModel fit_logistic(const std::vector<Instance>& rows, const std::vector<Label>& labels,
                         const std::array<bool, kNumAttributes>& mask,
                         const LinearFitConfig& config) {
  if (rows.empty() || rows.size() != labels.size()) {
    throw Error(ErrorCode::kPrecondition, "logistic fit needs matching, non-empty rows and labels");
  }
  const double n = static_cast<double>(rows.size());
  WeightModel out;
  const auto positives = std::count(labels.begin(), labels.end(), Label::Positive);
  if (positives == 0 || static_cast<double>(positives) == n) {
    out.intercept = positives == 0 ? -config.clamp_bound : config.clamp_bound;
    out.clamped = true;
    return out;
  }

  Instance mean{};
  Instance sd{};
  for (const auto& x : rows) {
    for (std::size_t i = 0; i < kNumAttributes; ++i) mean[i] += x[i];
  }
  for (auto& m : mean) m /= n;
  for (const auto& x : rows) {
    for (std::size_t i = 0; i < kNumAttributes; ++i) sd[i] += (x[i] - mean[i]) * (x[i] - mean[i]);
  }
  for (auto& s : sd) {
    s = std::sqrt(s / n);
    if (s <= 0.0) s = 1.0;
  }

  std::vector<Instance> z(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t i = 0; i < kNumAttributes; ++i) z[r][i] = (rows[r][i] - mean[i]) / sd[i];
  }

  Instance w{};
  double b = 0.0;
  bool clamped = false;
  for (std::size_t it = 0; it < config.iterations; ++it) {
    Instance grad{};
    double grad_b = 0.0;
    for (std::size_t r = 0; r < z.size(); ++r) {
      double s = b;
      for (std::size_t i = 0; i < kNumAttributes; ++i) s += w[i] * z[r][i];
      const double y = labels[r] == Label::Positive ? 1.0 : 0.0;
      const double d = logistic(s) - y;
      grad_b += d;
      for (std::size_t i = 0; i < kNumAttributes; ++i) grad[i] += d * z[r][i];
    }
    b -= config.learning_rate * grad_b / n;
    for (std::size_t i = 0; i < kNumAttributes; ++i) {
      if (!mask[i]) continue;
      w[i] -= config.learning_rate * (grad[i] / n + config.l2 * w[i]);
      if (std::fabs(w[i]) > config.clamp_bound) {
        w[i] = std::copysign(config.clamp_bound, w[i]);
        clamped = true;
      }
    }
    if (std::fabs(b) > config.clamp_bound) {
      b = std::copysign(config.clamp_bound, b);
      clamped = true;
    }
  }
  out.clamped = clamped;
  out.intercept = b;
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    out.factors[i] = mask[i] ? w[i] / sd[i] : 0.0;
    out.intercept -= out.factors[i] * mean[i];
  }
  return out;
}

WeightModel fit_linear_surrogate(const AiModel& ai, const Dataset& dataset, int k_nonzero,
                                 const LinearFitConfig& config) {
  if (k_nonzero != 3 && k_nonzero != 6) {
    throw Error(ErrorCode::kPrecondition, "k_nonzero must be 3 or 6");
  }
  const auto rows = dataset.train_rows();
  std::vector<Label> labels;
  labels.reserve(rows.size());
  for (const auto& x : rows) labels.push_back(ai.predict(x));
  std::array<bool, kNumAttributes> all{};
  all.fill(true);
  WeightModel full = fit_logistic(rows, labels, all, config);
  if (k_nonzero == 6 || full.nonzero_count() == 0) return full;

  // Rank on the standardized scale so attribute units do not dominate.
  Instance spread{};
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    double m = 0.0;
    for (const auto& x : rows) m += x[i];
    m /= static_cast<double>(rows.size());
    double v = 0.0;
    for (const auto& x : rows) v += (x[i] - m) * (x[i] - m);
    spread[i] = std::sqrt(v / static_cast<double>(rows.size()));
  }
  std::array<std::size_t, kNumAttributes> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::fabs(full.factors[a] * spread[a]) > std::fabs(full.factors[b] * spread[b]);
  });
  std::array<bool, kNumAttributes> mask{};
  for (int k = 0; k < k_nonzero; ++k) mask[order[static_cast<std::size_t>(k)]] = true;
  return fit_logistic(rows, labels, mask, config);
}

double fidelity(const Classifier& surrogate, const Classifier& reference,
                const std::vector<Instance>& rows) {
  if (rows.empty()) return 0.0;
  std::size_t agree = 0;
  for (const auto& x : rows) agree += surrogate(x) == reference(x);
  return static_cast<double>(agree) / static_cast<double>(rows.size());
}

}  // namespace coxam
