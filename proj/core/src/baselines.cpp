#include "coxam/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace coxam {
namespace {

constexpr int kGridSteps = 1000;

std::vector<const TrialRecord*> forward_only(std::span<const TrialRecord> records) {
  std::vector<const TrialRecord*> out;
  for (const auto& r : records) {
    if (r.phase == Phase::kForward) out.push_back(&r);
  }
  return out;
}

std::vector<double> smooth(std::span<const double> vote, double s) {
  std::vector<double> p(vote.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = (1.0 - s) * vote[i] + 0.5 * s;
  return p;
}

void require_smoothing(double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorCode::kPrecondition, "smoothing must lie in [0, 1]");
}

// Best smoothing on the grid for fixed per-trial votes in [0, 1].
std::pair<double, double> best_smoothing(std::span<const double> vote, std::span<const Label> responses) {
  double best_nll = std::numeric_limits<double>::infinity();
  double best_s = 1.0;
  for (int i = 0; i <= kGridSteps; ++i) {
    const double s = static_cast<double>(i) / kGridSteps;
    const double nll = nll_forward_unchecked(smooth(vote, s), responses);
    if (nll < best_nll) {
      best_nll = nll;
      best_s = s;
    }
  }
  return {best_s, best_nll};
}

std::vector<Label> forward_responses_of(const std::vector<const TrialRecord*>& fwd) {
  std::vector<Label> out;
  for (const auto* r : fwd) {
    if (!r->response_label) throw Error(ErrorCode::kPrecondition, "forward record without a response label");
    out.push_back(*r->response_label);
  }
  return out;
}

std::vector<double> knn_votes(const TaskModels& task, std::span<const TrialRecord> records, int k) {
  if (k < 1) throw Error(ErrorCode::kPrecondition, "k_neighbors must be at least 1");
  const auto seen = released_before(records);
  std::vector<double> votes;
  std::vector<std::pair<double, std::size_t>> dist;
  std::size_t f = 0;
  for (const auto& r : records) {
    if (r.phase != Phase::kForward) continue;
    const auto& train = seen[f++];
    if (train.empty()) {
      votes.push_back(0.5);
      continue;
    }
    dist.clear();
    for (std::size_t j = 0; j < train.size(); ++j) {
      double d2 = 0.0;
      for (std::size_t a = 0; a < kNumAttributes; ++a) {
        const double d = (r.instance[a] - train[j].first[a]) / task.attributes[a].range();
        d2 += d * d;
      }
      dist.emplace_back(d2, j);
    }
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(k), dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(n), dist.end());
    double positive = 0.0;
    for (std::size_t j = 0; j < n; ++j) positive += train[dist[j].second].second == Label::Positive ? 1.0 : 0.0;
    votes.push_back(positive / static_cast<double>(n));
  }
  return votes;
}

std::vector<double> proxy_votes(const TaskModels& task, ProxyKind kind, std::span<const TrialRecord> records) {
  if (kind == ProxyKind::kTree && !task.tree) throw Error(ErrorCode::kPrecondition, "task has no rule tree");
  if (kind == ProxyKind::kLinear && !task.weights) throw Error(ErrorCode::kPrecondition, "task has no weight model");
  std::vector<double> votes;
  for (const auto& r : records) {
    if (r.phase != Phase::kForward) continue;
    const Instance x = displayed(r.instance);
    const Label l = kind == ProxyKind::kTree ? task.tree->predict(x) : task.weights->predict(x);
    votes.push_back(l == Label::Positive ? 1.0 : 0.0);
  }
  return votes;
}

std::vector<std::size_t> chosen_attributes(std::span<const TrialRecord> records) {
  std::vector<std::size_t> out;
  for (const auto& r : records) {
    if (r.phase != Phase::kCounterfactual) continue;
    if (!r.edit) throw Error(ErrorCode::kPrecondition, "counterfactual record without an edit");
    out.push_back(r.edit->attribute);
  }
  return out;
}

ModelScore selection_score(std::string model, const Instance& selection, std::span<const TrialRecord> records) {
  const auto chosen = chosen_attributes(records);
  const std::vector<Instance> dists(chosen.size(), selection);
  const double nll = nll_cf_selection(dists, chosen);
  return make_score(std::move(model), nll, kRandomParams, static_cast<int>(std::max<std::size_t>(chosen.size(), 1)));
}

}  // namespace

double nll_forward_unchecked(std::span<const double> p_positive, std::span<const Label> responses) {
  if (p_positive.size() != responses.size()) throw Error(ErrorCode::kPrecondition, "one probability per response");
  double nll = 0.0;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const double p = responses[i] == Label::Positive ? p_positive[i] : 1.0 - p_positive[i];
    if (p <= 0.0) return std::numeric_limits<double>::infinity();
    nll -= std::log(p);
  }
  return nll;
}

std::vector<Label> forward_responses(std::span<const TrialRecord> records) {
  return forward_responses_of(forward_only(records));
}

std::vector<double> baseline_random_forward(std::span<const TrialRecord> records) {
  return std::vector<double>(forward_only(records).size(), 0.5);
}

std::vector<double> baseline_proxy(const TaskModels& task, ProxyKind kind, std::span<const TrialRecord> records,
                                   double smoothing) {
  require_smoothing(smoothing);
  return smooth(proxy_votes(task, kind, records), smoothing);
}

std::vector<std::vector<std::pair<Instance, Label>>> released_before(std::span<const TrialRecord> records) {
  std::vector<std::vector<std::pair<Instance, Label>>> out;
  std::vector<std::pair<Instance, Label>> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const TrialRecord& r = records[i];
    if (r.phase != Phase::kForward) continue;
    out.push_back(seen);
    if (r.feedback_deferred || !r.feedback_shown) continue;
    for (std::size_t j = 0; j < i; ++j) {
      const TrialRecord& prev = records[j];
      if (prev.phase == Phase::kForward && prev.feedback_deferred && prev.instance_id == r.instance_id) {
        seen.emplace_back(displayed(prev.instance), prev.ai_label);
      }
    }
    seen.emplace_back(displayed(r.instance), r.ai_label);
  }
  return out;
}

std::vector<double> baseline_knn(const TaskModels& task, std::span<const TrialRecord> records, int k_neighbors,
                                 double smoothing) {
  require_smoothing(smoothing);
  return smooth(knn_votes(task, records, k_neighbors), smoothing);
}

BaselineFit fit_proxy(const TaskModels& task, ProxyKind kind, std::span<const TrialRecord> records) {
  const auto votes = proxy_votes(task, kind, records);
  const auto responses = forward_responses(records);
  if (responses.empty()) throw Error(ErrorCode::kPrecondition, "the log has no forward trials");
  const auto [s, nll] = best_smoothing(votes, responses);
  BaselineFit fit;
  fit.smoothing = s;
  fit.p_positive = smooth(votes, s);
  fit.score = make_score(kind == ProxyKind::kTree ? "Decision Tree" : "Linear", nll, kProxyParams,
                         static_cast<int>(responses.size()));
  return fit;
}

BaselineFit fit_knn(const TaskModels& task, std::span<const TrialRecord> records, int max_k) {
  if (max_k < 1) throw Error(ErrorCode::kPrecondition, "max_k must be at least 1");
  const auto responses = forward_responses(records);
  if (responses.empty()) throw Error(ErrorCode::kPrecondition, "the log has no forward trials");
  BaselineFit fit;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= max_k; ++k) {
    const auto votes = knn_votes(task, records, k);
    const auto [s, nll] = best_smoothing(votes, responses);
    if (nll < best) {
      best = nll;
      fit.k_neighbors = k;
      fit.smoothing = s;
      fit.p_positive = smooth(votes, s);
    }
  }
  fit.score = make_score("KNN", best, kKnnParams, static_cast<int>(responses.size()));
  return fit;
}

BaselineFit score_random_forward(std::span<const TrialRecord> records) {
  const auto responses = forward_responses(records);
  if (responses.empty()) throw Error(ErrorCode::kPrecondition, "the log has no forward trials");
  BaselineFit fit;
  fit.smoothing = 1.0;
  fit.p_positive = baseline_random_forward(records);
  fit.score = make_score("Random", nll_forward(observed_probabilities(fit.p_positive, responses)), kRandomParams,
                         static_cast<int>(responses.size()));
  return fit;
}

ModelScore score_random_selection(std::span<const TrialRecord> records) {
  Instance uniform;
  uniform.fill(1.0 / static_cast<double>(kNumAttributes));
  return selection_score("Random", uniform, records);
}

ModelScore score_shap_selection(const Instance& selection, std::span<const TrialRecord> records) {
  return selection_score("Global SHAP", selection, records);
}

std::vector<BaselineFit> forward_baselines(const TaskModels& task, std::span<const TrialRecord> records) {
  std::vector<BaselineFit> out;
  out.push_back(score_random_forward(records));
  if (task.tree) out.push_back(fit_proxy(task, ProxyKind::kTree, records));
  if (task.weights) out.push_back(fit_proxy(task, ProxyKind::kLinear, records));
  out.push_back(fit_knn(task, records));
  return out;
}

}  // namespace coxam
