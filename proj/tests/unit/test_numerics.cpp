#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "coxam/common.hpp"
#include "coxam/ddm.hpp"

namespace coxam {
namespace {

TEST(Common, RoundSigKeepsThreeFigures) {
  EXPECT_DOUBLE_EQ(round_sig(12.3456), 12.3);
  EXPECT_DOUBLE_EQ(round_sig(0.0012345), 0.00123);
  EXPECT_DOUBLE_EQ(round_sig(-98765.0), -98800.0);
  EXPECT_DOUBLE_EQ(round_sig(0.0), 0.0);
  EXPECT_EQ(format_sig3(12.3456), "12.3");
}

TEST(Common, LogisticAndSoftplusAreStable) {
  EXPECT_DOUBLE_EQ(logistic(0.0), 0.5);
  EXPECT_NEAR(logistic(800.0), 1.0, 1e-15);
  EXPECT_NEAR(logistic(-800.0), 0.0, 1e-15);
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(softplus(800.0), 800.0, 1e-9);
  EXPECT_TRUE(std::isfinite(softplus(-800.0)));
}

TEST(Common, NormalCdfMatchesKnownValues) {
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.959963985), 0.975, 1e-9);
  EXPECT_NEAR(normal_pdf(0.0), 1.0 / std::sqrt(2.0 * M_PI), 1e-15);
}

TEST(Common, DeriveSeedIsDeterministicAndSpreads) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
}

TEST(Common, LabelsRoundTrip) {
  EXPECT_EQ(label_from_int(1), Label::Positive);
  EXPECT_EQ(label_from_int(-1), Label::Negative);
  EXPECT_THROW(label_from_int(0), Error);
  EXPECT_EQ(opposite(Label::Positive), Label::Negative);
  EXPECT_EQ(label_from_sign(0.0), Label::Positive);
}

TEST(Ddm, ZeroEvidenceIsExactlyHalf) {
  for (double a : {0.5, 1.0, 4.0}) {
    for (double nu : {0.3, 1.0, 3.0}) EXPECT_EQ(ddm_choice_prob(0.0, {a, nu}), 0.5);
  }
}

TEST(Ddm, ChoiceProbabilityExample) {
  EXPECT_NEAR(ddm_choice_prob(1.0, {1.0, 1.0}), 0.8807970779778823, 1e-12);
}

TEST(Ddm, ChoiceProbabilityIsAntisymmetric) {
  for (double e = -3.0; e <= 3.0; e += 0.125) {
    EXPECT_NEAR(ddm_choice_prob(e, {1.3, 0.7}) + ddm_choice_prob(-e, {1.3, 0.7}), 1.0, 1e-12);
  }
}

TEST(Ddm, ChoiceProbabilityMonotoneInEvidenceEffortAndNoise) {
  double prev = 0.0;
  for (double e = -2.0; e <= 2.0; e += 0.1) {
    const double p = ddm_choice_prob(e, {1.0, 1.0});
    EXPECT_GT(p, prev);
    prev = p;
  }
  EXPECT_LT(ddm_choice_prob(0.5, {1.0, 1.0}), ddm_choice_prob(0.5, {2.0, 1.0}));
  EXPECT_GT(ddm_choice_prob(0.5, {1.0, 1.0}), ddm_choice_prob(0.5, {1.0, 2.0}));
}

TEST(Ddm, ExpectedTimeExamples) {
  EXPECT_NEAR(ddm_expected_time(1.0, {1.0, 1.0}), std::tanh(1.0), 1e-12);
  EXPECT_NEAR(ddm_expected_time(-1.0, {1.0, 1.0}), std::tanh(1.0), 1e-12);
  EXPECT_DOUBLE_EQ(ddm_expected_time(0.0, {2.0, 1.0}), 4.0);
  EXPECT_NEAR(ddm_expected_time(1e-8, {2.0, 1.0}), 4.0, 1e-6);
  EXPECT_LT(ddm_expected_time(1e9, {1.0, 1.0}), 1e-8);
}

TEST(Ddm, ExpectedTimeDecreasesWithEvidence) {
  double prev = std::numeric_limits<double>::infinity();
  for (double e = 0.0; e <= 4.0; e += 0.25) {
    const double t = ddm_expected_time(e, {1.5, 1.0});
    EXPECT_LT(t, prev);
    prev = t;
  }
}

TEST(Ddm, InvalidParametersThrow) {
  EXPECT_THROW(validate(DdmParams{0.0, 1.0}), Error);
  EXPECT_THROW(validate(DdmParams{1.0, -1.0}), Error);
}

TEST(Ddm, LapseExamples) {
  EXPECT_DOUBLE_EQ(apply_lapse(1.0, 0.05), 0.975);
  EXPECT_DOUBLE_EQ(apply_lapse(0.5, 0.05), 0.5);
  EXPECT_DOUBLE_EQ(apply_lapse(0.3, 0.0), 0.3);
  EXPECT_NEAR(apply_lapse(1.0, 0.05, 6), 0.95 + 0.05 / 6.0, 1e-15);
}

TEST(Ddm, TotalTimeExamples) {
  EXPECT_NEAR(total_time(0.76, 6, 0), 6.76, 1e-12);
  EXPECT_DOUBLE_EQ(total_time(0.0, 0, 0), 0.0);
  EXPECT_NEAR(total_time(0.5, 6, 4), 14.5, 1e-12);
}

}  // namespace
}  // namespace coxam
