#include "coxam/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Dense>

namespace coxam {

double nll_forward(std::span<const double> p_observed) {
  double nll = 0.0;
  for (const double p : p_observed) {
    if (!(p > 0.0 && p < 1.0)) {
      throw Error(ErrorCode::kInvariant, "response probability " + std::to_string(p) + " lies outside (0, 1)");
    }
    nll -= std::log(p);
  }
  return nll;
}

std::vector<double> observed_probabilities(std::span<const double> p_positive, std::span<const Label> responses) {
  if (p_positive.size() != responses.size()) {
    throw Error(ErrorCode::kPrecondition, "one probability per response is required");
  }
  std::vector<double> out(p_positive.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = responses[i] == Label::Positive ? p_positive[i] : 1.0 - p_positive[i];
  }
  return out;
}

double nll_cf_selection(std::span<const Instance> selection, std::span<const std::size_t> chosen, double lapse) {
  if (selection.size() != chosen.size()) throw Error(ErrorCode::kPrecondition, "one distribution per choice is required");
  double nll = 0.0;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    if (chosen[i] >= kNumAttributes) throw Error(ErrorCode::kPrecondition, "chosen attribute out of range");
    const double p = (1.0 - lapse) * selection[i][chosen[i]] + lapse / static_cast<double>(kNumAttributes);
    if (!(p > 0.0)) throw Error(ErrorCode::kInvariant, "selection probability must be positive");
    nll -= std::log(p);
  }
  return nll;
}

double mae(std::span<const double> predicted, std::span<const double> observed) {
  if (predicted.size() != observed.size()) throw Error(ErrorCode::kPrecondition, "mae needs equal-length inputs");
  if (predicted.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) total += std::abs(predicted[i] - observed[i]);
  return total / static_cast<double>(predicted.size());
}

double bic(double nll, int k, int n) {
  if (n < 1) throw Error(ErrorCode::kPrecondition, "bic needs at least one trial");
  return 2.0 * nll + k * std::log(static_cast<double>(n));
}

ModelScore make_score(std::string model, double nll, int k, int n) {
  return {std::move(model), nll, k, n, bic(nll, k, n)};
}

ReplayPrediction replay_log(const TaskModels& task, XaiCondition condition, std::span<const TrialRecord> records,
                            const CognitiveParams& params, Controller& controller, std::uint64_t seed) {
  ReplayPrediction out;
  Agent agent(task, condition, params, controller, seed);
  agent.study();
  std::map<int, ForwardDecision> pending;
  int fwd_index = 0;
  int cf_index = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const TrialRecord& r = records[i];
    if (r.phase == Phase::kForward) {
      ForwardDecision d = agent.forward_trial(r.instance, r.shown, fwd_index++);
      out.p_positive.push_back(d.result.p_positive);
      if (r.feedback_deferred) {
        pending.emplace(r.trial_index, std::move(d));
        continue;
      }
      agent.forward_feedback(r.instance, r.ai_label, r.shown);
      for (auto it = pending.begin(); it != pending.end();) {
        const bool same = std::any_of(records.begin(), records.begin() + static_cast<std::ptrdiff_t>(i),
                                      [&](const TrialRecord& prev) {
                                        return prev.trial_index == it->first && prev.instance_id == r.instance_id;
                                      });
        if (same) {
          agent.record_forward_outcome(it->second, r.ai_label);
          it = pending.erase(it);
        } else {
          ++it;
        }
      }
      agent.record_forward_outcome(d, r.ai_label);
      continue;
    }
    if (!r.edit) throw Error(ErrorCode::kPrecondition, "counterfactual record without an edit");
    const CounterfactualDecision d = agent.counterfactual_trial(r.instance, r.shown, cf_index++);
    out.selection.push_back(d.distribution.attribute_probabilities());
    Instance mass{};
    Instance weighted{};
    for (const auto& w : d.distribution.edits) {
      const auto a = w.edit.attribute;
      mass[a] += w.probability;
      weighted[a] += w.probability * w.edit.delta / task.attributes[a].range();
    }
    Instance mean{};
    for (std::size_t a = 0; a < kNumAttributes; ++a) mean[a] = mass[a] > 0.0 ? weighted[a] / mass[a] : 0.0;
    out.mean_delta.push_back(mean);
    agent.commit_edit(d.target, *r.edit);
    const Instance x = displayed(r.instance);
    const TrialContext ctx = agent.context(r.instance, r.shown);
    agent.record_counterfactual_outcome(d, internal_label(ctx, condition, r.edit->apply(x)) != d.internal);
  }
  return out;
}

std::vector<std::string> fit_parameter_names(FitTarget target) {
  if (target == FitTarget::kForward) return {"kappa", "gamma", "nu"};
  return {"kappa", "gamma", "epsilon"};
}

std::vector<std::pair<double, double>> default_fit_bounds(FitTarget target) {
  if (target == FitTarget::kForward) return {{-3.0, 2.0}, {0.0, 0.1}, {0.3, 3.0}};
  return {{-3.0, 2.0}, {0.0, 0.1}, {0.01, 0.5}};
}

CognitiveParams params_from_vector(FitTarget target, std::span<const double> theta, const CognitiveParams& base) {
  if (theta.size() != 3) throw Error(ErrorCode::kPrecondition, "three fitted coordinates expected");
  CognitiveParams p = base;
  p.kappa = theta[0];
  p.gamma = theta[1];
  if (target == FitTarget::kForward) {
    p.nu = theta[2];
  } else {
    p.epsilon = theta[2];
  }
  p.validate();
  return p;
}

std::vector<double> params_to_vector(FitTarget target, const CognitiveParams& p) {
  return {p.kappa, p.gamma, target == FitTarget::kForward ? p.nu : p.epsilon};
}

ParticipantObjective::ParticipantObjective(const TaskModels& task, XaiCondition condition,
                                           std::vector<TrialRecord> records, FitTarget target, int replays,
                                           std::uint64_t seed, CognitiveParams base)
    : task_(&task),
      condition_(condition),
      records_(std::move(records)),
      target_(target),
      replays_(replays),
      seed_(seed),
      base_(base) {
  if (replays_ < 1) throw Error(ErrorCode::kPrecondition, "at least one replay is required");
  if (target_ == FitTarget::kForward) {
    // Counterfactual trials cannot influence forward predictions; drop them.
    std::erase_if(records_, [](const TrialRecord& r) { return r.phase != Phase::kForward; });
  }
  if (n_trials() == 0) throw Error(ErrorCode::kPrecondition, "the log has no trials to fit");
  for (const auto& r : records_) {
    if (r.phase == Phase::kForward && !r.response_label) {
      throw Error(ErrorCode::kPrecondition, "forward record without a response label");
    }
  }
}

int ParticipantObjective::n_trials() const {
  const Phase want = target_ == FitTarget::kForward ? Phase::kForward : Phase::kCounterfactual;
  return static_cast<int>(std::count_if(records_.begin(), records_.end(), [&](const auto& r) { return r.phase == want; }));
}

ReplayPrediction ParticipantObjective::mean_prediction(const CognitiveParams& params) const {
  MyopicController controller;
  ReplayPrediction mean;
  std::vector<Instance> delta_mass;
  for (int k = 0; k < replays_; ++k) {
    const auto p = replay_log(*task_, condition_, records_, params, controller,
                              derive_seed(seed_, static_cast<std::uint64_t>(k)));
    if (k == 0) {
      mean.p_positive.assign(p.p_positive.size(), 0.0);
      mean.selection.assign(p.selection.size(), Instance{});
      mean.mean_delta.assign(p.mean_delta.size(), Instance{});
      delta_mass.assign(p.selection.size(), Instance{});
    }
    for (std::size_t i = 0; i < p.p_positive.size(); ++i) mean.p_positive[i] += p.p_positive[i];
    for (std::size_t i = 0; i < p.selection.size(); ++i) {
      for (std::size_t a = 0; a < kNumAttributes; ++a) {
        mean.selection[i][a] += p.selection[i][a];
        mean.mean_delta[i][a] += p.selection[i][a] * p.mean_delta[i][a];
        delta_mass[i][a] += p.selection[i][a];
      }
    }
  }
  const double n = static_cast<double>(replays_);
  for (auto& v : mean.p_positive) v /= n;
  for (std::size_t i = 0; i < mean.selection.size(); ++i) {
    for (std::size_t a = 0; a < kNumAttributes; ++a) {
      mean.selection[i][a] /= n;
      mean.mean_delta[i][a] = delta_mass[i][a] > 0.0 ? mean.mean_delta[i][a] / delta_mass[i][a] : 0.0;
    }
  }
  return mean;
}

double ParticipantObjective::evaluate(const CognitiveParams& params) const {
  const ReplayPrediction m = mean_prediction(params);
  if (target_ == FitTarget::kForward) {
    std::vector<Label> responses;
    for (const auto& r : records_) responses.push_back(*r.response_label);
    return nll_forward(observed_probabilities(m.p_positive, responses));
  }
  std::vector<std::size_t> chosen;
  std::vector<double> predicted;
  std::vector<double> observed;
  std::size_t i = 0;
  for (const auto& r : records_) {
    if (r.phase != Phase::kCounterfactual) continue;
    const auto a = r.edit->attribute;
    chosen.push_back(a);
    predicted.push_back(m.mean_delta[i][a]);
    observed.push_back(r.edit->delta / task_->attributes[a].range());
    ++i;
  }
  return nll_cf_selection(m.selection, chosen, base_.lapse) + mae(predicted, observed);
}

double ParticipantObjective::operator()(std::span<const double> theta) const {
  return evaluate(params_from_vector(target_, theta, base_));
}

namespace {

double halton(std::size_t index, std::size_t base) {
  double f = 1.0;
  double r = 0.0;
  while (index > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

struct Gp {
  Eigen::MatrixXd x;
  Eigen::VectorXd alpha;
  Eigen::LLT<Eigen::MatrixXd> llt;
  double lengthscale = 0.2;
  double noise = 1e-3;
  double mean = 0.0;
  double scale = 1.0;

  static double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double ell) {
    return std::exp(-0.5 * (a - b).squaredNorm() / (ell * ell));
  }

  // Returns the log marginal likelihood, or -inf when the factorization fails.
  double fit(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys, double ell, double nz) {
    x = xs;
    lengthscale = ell;
    noise = nz;
    mean = ys.mean();
    const double sd = std::sqrt((ys.array() - mean).square().mean());
    scale = sd > 1e-12 ? sd : 1.0;
    const Eigen::VectorXd y = (ys.array() - mean) / scale;
    const auto n = xs.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        k(i, j) = k(j, i) = kernel(xs.row(i), xs.row(j), ell);
      }
      k(i, i) += nz;
    }
    llt.compute(k);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    alpha = llt.solve(y);
    const Eigen::MatrixXd l = llt.matrixL();
    return -0.5 * y.dot(alpha) - l.diagonal().array().log().sum();
  }

  std::pair<double, double> predict(const Eigen::VectorXd& q) const {
    const auto n = x.rows();
    Eigen::VectorXd ks(n);
    for (Eigen::Index i = 0; i < n; ++i) ks(i) = kernel(x.row(i), q, lengthscale);
    const double mu = ks.dot(alpha);
    const Eigen::VectorXd v = llt.matrixL().solve(ks);
    const double var = std::max(1.0 + noise - v.squaredNorm(), 1e-12);
    return {mean + scale * mu, scale * std::sqrt(var)};
  }
};

double expected_improvement(double mu, double sd, double best) {
  const double z = (best - mu) / sd;
  return (best - mu) * normal_cdf(z) + sd * normal_pdf(z);
}

}  // namespace

FitResult minimize_gp(const std::function<double(std::span<const double>)>& f,
                      const std::vector<std::pair<double, double>>& bounds, const OptimizerConfig& config) {
  const std::size_t d = bounds.size();
  if (d == 0 || d > 8) throw Error(ErrorCode::kPrecondition, "between one and eight coordinates are supported");
  for (const auto& [lo, hi] : bounds) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) {
      throw Error(ErrorCode::kPrecondition, "bounds must be finite with lower < upper");
    }
  }
  if (config.budget < 1) throw Error(ErrorCode::kPrecondition, "budget must be positive");
  static constexpr std::array<std::size_t, 8> kPrimes{2, 3, 5, 7, 11, 13, 17, 19};
  Rng rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Random shift per axis keeps the design seeded without losing low discrepancy.
  std::vector<double> shift(d);
  for (auto& s : shift) s = unit(rng);

  FitResult result;
  std::vector<Eigen::VectorXd> us;
  std::vector<double> ys;
  const auto to_x = [&](const Eigen::VectorXd& u) {
    std::vector<double> x(d);
    for (std::size_t i = 0; i < d; ++i) x[i] = bounds[i].first + u(static_cast<Eigen::Index>(i)) * (bounds[i].second - bounds[i].first);
    return x;
  };
  const auto evaluate = [&](const Eigen::VectorXd& u) {
    const auto x = to_x(u);
    const double y = f(x);
    if (!std::isfinite(y)) throw Error(ErrorCode::kInvariant, "objective returned a non-finite value");
    us.push_back(u);
    ys.push_back(y);
    result.trace.push_back({x, y});
    if (result.trace.size() == 1 || y < result.best_objective) {
      result.best = x;
      result.best_objective = y;
    }
  };

  const int initial = std::min(config.initial, config.budget);
  for (int k = 0; k < initial; ++k) {
    Eigen::VectorXd u(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
      u(static_cast<Eigen::Index>(i)) = std::fmod(halton(static_cast<std::size_t>(k) + 1, kPrimes[i]) + shift[i], 1.0);
    }
    evaluate(u);
  }

  Gp gp;
  double ell = 0.2;
  double noise = 1e-2;
  int quiet = 0;
  bool converged = false;
  static constexpr std::array<double, 5> kLengths{0.08, 0.15, 0.3, 0.5, 0.8};
  static constexpr std::array<double, 4> kNoises{1e-4, 1e-3, 1e-2, 1e-1};
  std::normal_distribution<double> normal(0.0, 1.0);
  while (static_cast<int>(ys.size()) < config.budget) {
    const auto n = static_cast<Eigen::Index>(ys.size());
    Eigen::MatrixXd xs(n, static_cast<Eigen::Index>(d));
    Eigen::VectorXd yv(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      xs.row(i) = us[static_cast<std::size_t>(i)];
      yv(i) = ys[static_cast<std::size_t>(i)];
    }
    if ((n - initial) % 10 == 0) {
      double best_lml = -std::numeric_limits<double>::infinity();
      for (const double l : kLengths) {
        for (const double nz : kNoises) {
          const double lml = gp.fit(xs, yv, l, nz);
          if (lml > best_lml) {
            best_lml = lml;
            ell = l;
            noise = nz;
          }
        }
      }
    }
    if (!std::isfinite(gp.fit(xs, yv, ell, noise))) gp.fit(xs, yv, ell, 1e-1);

    // Incumbent: best posterior mean among evaluated points (robust to noisy lucky draws).
    double incumbent = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order(us.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ys[a] < ys[b]; });
    for (const auto& u : us) incumbent = std::min(incumbent, gp.predict(u).first);

    Eigen::VectorXd best_u = us[order[0]];
    double best_ei = -1.0;
    const auto consider = [&](Eigen::VectorXd u) {
      u = u.cwiseMax(0.0).cwiseMin(1.0);
      const auto [mu, sd] = gp.predict(u);
      const double ei = expected_improvement(mu, sd, incumbent);
      if (ei > best_ei) {
        best_ei = ei;
        best_u = u;
      }
    };
    for (int c = 0; c < config.candidates; ++c) {
      Eigen::VectorXd u(static_cast<Eigen::Index>(d));
      for (std::size_t i = 0; i < d; ++i) u(static_cast<Eigen::Index>(i)) = unit(rng);
      consider(u);
    }
    const std::size_t top = std::min<std::size_t>(5, order.size());
    for (std::size_t t = 0; t < top; ++t) {
      for (int c = 0; c < 40; ++c) {
        Eigen::VectorXd u = us[order[t]];
        for (std::size_t i = 0; i < d; ++i) u(static_cast<Eigen::Index>(i)) += 0.5 * ell * normal(rng);
        consider(u);
      }
    }
    const double spread = *std::max_element(ys.begin(), ys.end()) - *std::min_element(ys.begin(), ys.end());
    quiet = best_ei < config.min_improvement * std::max(spread, 1e-12) ? quiet + 1 : 0;
    if (quiet >= config.patience) {
      converged = true;
      break;
    }
    evaluate(best_u);
  }
  result.evaluations = static_cast<int>(ys.size());
  result.budget_exhausted = !converged && result.evaluations >= config.budget;
  return result;
}

ParticipantFit fit_participant(const TaskModels& task, XaiCondition condition, const std::vector<TrialRecord>& records,
                               FitTarget target, const OptimizerConfig& optimizer, int replays,
                               std::vector<std::pair<double, double>> bounds, CognitiveParams base) {
  if (bounds.empty()) bounds = default_fit_bounds(target);
  if (bounds.size() != 3) throw Error(ErrorCode::kPrecondition, "three bounds expected");
  const ParticipantObjective objective(task, condition, records, target, replays, optimizer.seed, base);
  ParticipantFit fit;
  fit.target = target;
  fit.result = minimize_gp([&](std::span<const double> theta) { return objective(theta); }, bounds, optimizer);
  fit.params = params_from_vector(target, fit.result.best, base);
  fit.score = make_score("CoXAM", fit.result.best_objective, 3, objective.n_trials());
  return fit;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw Error(ErrorCode::kPrecondition, "spearman needs two equal samples");
  const auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double num = 0.0;
  double da = 0.0;
  double db = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0.0 || db == 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

}  // namespace coxam
