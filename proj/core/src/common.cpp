#include "coxam/common.hpp"

#include <cmath>
#include <cstdio>

namespace coxam {

Label label_from_int(int v) {
  if (v == 1) return Label::Positive;
  if (v == -1) return Label::Negative;
  throw Error(ErrorCode::kValidation, "label must be -1 or +1, got " + std::to_string(v));
}

std::string_view display_name(Label l) {
  return l == Label::Negative ? "Type 1" : "Type 2";
}

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kDatasetTooSmall: return "dataset_too_small";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kInvariant: return "invariant";
    case ErrorCode::kStructure: return "structure";
    case ErrorCode::kUnavailable: return "unavailable";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kState: return "state";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

double round_sig(double value, int digits) {
  if (value == 0.0 || !std::isfinite(value)) return value;
  const double magnitude = std::floor(std::log10(std::fabs(value)));
  const double scale = std::pow(10.0, digits - 1 - magnitude);
  return std::round(value * scale) / scale;
}

std::string format_sig3(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", round_sig(value, 3));
  return buf;
}

double logistic(double x) {
  if (x >= 0.0) {
    const double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(x);
  return z / (1.0 + z);
}

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_pdf(double x) {
  static const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * M_PI);
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace coxam
