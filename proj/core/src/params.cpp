#include "coxam/params.hpp"

#include <cmath>

namespace coxam {

void CognitiveParams::validate() const {
  const auto fail = [](const char* field, const char* rule) {
    throw Error(ErrorCode::kValidation, std::string(field) + " " + rule);
  };
  if (std::isnan(kappa)) fail("kappa", "must be a number");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) fail("gamma", "must be finite and >= 0");
  if (!(nu > 0.0) || !std::isfinite(nu)) fail("nu", "must be finite and > 0");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) fail("epsilon", "must be finite and > 0");
  if (!(zeta > 0.0) || !std::isfinite(zeta)) fail("zeta", "must be finite and > 0");
  if (!(lapse >= 0.0 && lapse < 1.0)) fail("lapse", "must lie in [0, 1)");
  if (!(depth_sd >= 0.0) || !std::isfinite(depth_sd)) fail("depth_sd", "must be finite and >= 0");
}

}  // namespace coxam
