#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coxam/session.hpp"

namespace coxam {

/// -sum ln p over the probabilities of the observed responses. Throws kInvariant for any p
/// outside (0, 1).
double nll_forward(std::span<const double> p_observed);

/// Probability of each forward record's observed response given P(+1) per record.
std::vector<double> observed_probabilities(std::span<const double> p_positive, std::span<const Label> responses);

/// -sum ln((1 - lapse) P(chosen) + lapse / 6) over counterfactual trials.
double nll_cf_selection(std::span<const Instance> selection, std::span<const std::size_t> chosen,
                        double lapse = kLapseRate);

/// Mean |predicted - observed|; both already normalized by attribute range. 0 for no trials.
double mae(std::span<const double> predicted, std::span<const double> observed);

/// 2 nll + k ln n. Throws kPrecondition for n < 1.
double bic(double nll, int k, int n);

struct ModelScore {
  std::string model;
  double nll = 0.0;
  int k = 0;
  int n = 0;
  double bic = 0.0;
};

ModelScore make_score(std::string model, double nll, int k, int n);

/// Per-record predictions of one replay of an agent through a logged session.
struct ReplayPrediction {
  /// One entry per forward record, in log order.
  std::vector<double> p_positive;
  /// One entry per counterfactual record: the strategy's attribute-selection distribution.
  std::vector<Instance> selection;
  /// Per counterfactual record, per attribute: expected range-normalized delta given that
  /// attribute is edited (0 where the attribute has no mass).
  std::vector<Instance> mean_delta;
};

/// Runs an agent through the logged trials in order. Feedback is released exactly as it was in
/// the session; counterfactual memory stores the participant's edits (teacher forcing).
ReplayPrediction replay_log(const TaskModels& task, XaiCondition condition, std::span<const TrialRecord> records,
                            const CognitiveParams& params, Controller& controller, std::uint64_t seed);

enum class FitTarget { kForward, kCounterfactual };

/// Names of the fitted coordinates: (kappa, gamma, nu) or (kappa, gamma, epsilon).
std::vector<std::string> fit_parameter_names(FitTarget target);
/// Default search box per coordinate.
std::vector<std::pair<double, double>> default_fit_bounds(FitTarget target);
CognitiveParams params_from_vector(FitTarget target, std::span<const double> theta, const CognitiveParams& base);
std::vector<double> params_to_vector(FitTarget target, const CognitiveParams& p);

/// Objective under myopic control, averaged over a fixed set of replays; the replay seeds stay fixed across
/// candidates (common random numbers). Forward: NLL of the replay-averaged response
/// probabilities. Counterfactual: selection NLL plus delta MAE, weighted 1:1.
class ParticipantObjective {
 public:
  ParticipantObjective(const TaskModels& task, XaiCondition condition, std::vector<TrialRecord> records,
                       FitTarget target, int replays, std::uint64_t seed, CognitiveParams base = {});

  double operator()(std::span<const double> theta) const;
  double evaluate(const CognitiveParams& params) const;

  /// Replay-averaged predictions at `params`.
  ReplayPrediction mean_prediction(const CognitiveParams& params) const;

  FitTarget target() const { return target_; }
  int n_trials() const;
  const CognitiveParams& base() const { return base_; }

 private:
  const TaskModels* task_;
  XaiCondition condition_;
  std::vector<TrialRecord> records_;
  FitTarget target_;
  int replays_;
  std::uint64_t seed_;
  CognitiveParams base_;
};

struct Evaluation {
  std::vector<double> x;
  double objective = 0.0;
};

struct FitResult {
  std::vector<double> best;
  double best_objective = 0.0;
  std::vector<Evaluation> trace;
  int evaluations = 0;
  /// The optimizer spent its whole budget without meeting its convergence test.
  bool budget_exhausted = false;
};

struct OptimizerConfig {
  int budget = 200;
  /// Quasi-random design points before the surrogate takes over.
  int initial = 16;
  int candidates = 1500;
  /// Stop once expected improvement stays below this fraction of the objective's spread for
  /// `patience` consecutive steps.
  double min_improvement = 1e-4;
  int patience = 25;
  std::uint64_t seed = 1;
};

/// Bounded, seeded, derivative-free minimization: a Halton design followed by Gaussian-process
/// expected-improvement steps (RBF kernel, hyperparameters by marginal likelihood on a grid).
FitResult minimize_gp(const std::function<double(std::span<const double>)>& f,
                      const std::vector<std::pair<double, double>>& bounds, const OptimizerConfig& config);

struct ParticipantFit {
  FitTarget target = FitTarget::kForward;
  CognitiveParams params;
  FitResult result;
  ModelScore score;
};

/// Fits (kappa, gamma, nu) or (kappa, gamma, epsilon) to one participant's log under myopic control.
/// Throws kPrecondition when the log has no trials for the target phase.
ParticipantFit fit_participant(const TaskModels& task, XaiCondition condition, const std::vector<TrialRecord>& records,
                               FitTarget target, const OptimizerConfig& optimizer,
                               int replays = 32, std::vector<std::pair<double, double>> bounds = {},
                               CognitiveParams base = {});

/// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace coxam
