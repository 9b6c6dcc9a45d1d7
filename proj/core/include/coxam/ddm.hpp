#pragma once

namespace coxam {

/// Drift-diffusion parameters: boundary effort `a` and diffusion noise `nu`, both > 0.
struct DdmParams {
  double effort = 1.0;
  double noise = 1.0;
};

struct ChoiceOutcome {
  double p_positive = 0.5;
  double execution_time = 0.0;
  double evidence = 0.0;
};

void validate(const DdmParams& params);

/// logistic(2 a e / nu^2)
double ddm_choice_prob(double evidence, const DdmParams& params);

/// (a / |e|) tanh(a |e| / nu^2), with the continuous limit a^2 / nu^2 at e = 0.
double ddm_expected_time(double evidence, const DdmParams& params);

ChoiceOutcome ddm_choice(double evidence, const DdmParams& params);

/// (1 - lambda) p + lambda / n_choices
double apply_lapse(double p, double lambda, int n_choices = 2);

inline constexpr double kSecondsPerRead = 1.0;
inline constexpr double kSecondsPerCalculation = 2.0;

double total_time(double execution_time, int n_reads, int n_calcs);

}  // namespace coxam
