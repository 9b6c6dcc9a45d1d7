#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace coxam {

/// Every task exposes exactly six attributes.
inline constexpr std::size_t kNumAttributes = 6;

/// Lapse rate mixed into every choice.
inline constexpr double kLapseRate = 0.05;

using Instance = std::array<double, kNumAttributes>;
using Rng = std::mt19937_64;

/// Binary class label. Participants see these anonymized as "Type 1" / "Type 2".
enum class Label : int { Negative = -1, Positive = 1 };

inline constexpr int to_int(Label l) { return static_cast<int>(l); }
inline constexpr Label opposite(Label l) {
  return l == Label::Positive ? Label::Negative : Label::Positive;
}
inline constexpr Label label_from_sign(double v) {
  return v >= 0.0 ? Label::Positive : Label::Negative;
}
Label label_from_int(int v);
std::string_view display_name(Label l);

enum class ErrorCode {
  kConfig,
  kParse,
  kDatasetTooSmall,
  kInfeasible,
  kPrecondition,
  kInvariant,
  kStructure,
  kUnavailable,
  kNotFound,
  kConflict,
  kState,
  kValidation,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Rounds to `digits` significant figures, the precision participants read from screen.
double round_sig(double value, int digits = 3);

/// Formats with three significant figures, matching the on-screen text.
std::string format_sig3(double value);

inline double sign_or_positive(double v) { return v >= 0.0 ? 1.0 : -1.0; }

double logistic(double x);

/// Numerically stable log(1 + exp(x)).
double softplus(double x);

/// Standard normal CDF and density.
double normal_cdf(double x);
double normal_pdf(double x);

/// Derives an independent stream from a base seed and a stream index (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace coxam
