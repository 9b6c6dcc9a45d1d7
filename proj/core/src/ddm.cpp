#include "coxam/ddm.hpp"

#include <cmath>

#include "coxam/common.hpp"

namespace coxam {

void validate(const DdmParams& params) {
  if (!(params.effort > 0.0) || !(params.noise > 0.0)) {
    throw Error(ErrorCode::kPrecondition, "DDM effort and noise must be positive");
  }
}

double ddm_choice_prob(double evidence, const DdmParams& params) {
  validate(params);
  return logistic(2.0 * params.effort * evidence / (params.noise * params.noise));
}

double ddm_expected_time(double evidence, const DdmParams& params) {
  validate(params);
  const double a = params.effort;
  const double nu2 = params.noise * params.noise;
  const double abs_e = std::fabs(evidence);
  const double z = a * abs_e / nu2;
  // tanh(z)/z -> 1 - z^2/3 for small z avoids cancellation near e = 0.
  if (z < 1e-6) return a * a / nu2 * (1.0 - z * z / 3.0);
  return a / abs_e * std::tanh(z);
}

ChoiceOutcome ddm_choice(double evidence, const DdmParams& params) {
  return {ddm_choice_prob(evidence, params), ddm_expected_time(evidence, params), evidence};
}

double apply_lapse(double p, double lambda, int n_choices) {
  if (!(lambda >= 0.0 && lambda < 1.0) || n_choices < 2) {
    throw Error(ErrorCode::kPrecondition, "lapse needs 0 <= lambda < 1 and at least two choices");
  }
  return (1.0 - lambda) * p + lambda / n_choices;
}

double total_time(double execution_time, int n_reads, int n_calcs) {
  if (n_reads < 0 || n_calcs < 0) throw Error(ErrorCode::kPrecondition, "counts must be non-negative");
  return execution_time + kSecondsPerRead * n_reads + kSecondsPerCalculation * n_calcs;
}

}  // namespace coxam
