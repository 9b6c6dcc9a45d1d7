#include "coxam/trial_pool.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace coxam {

TrialPool select_trial_instances(const Classifier& ai, const std::vector<Classifier>& surrogates,
                                 const std::vector<Instance>& pool, std::size_t n,
                                 std::uint64_t seed, double target_fidelity) {
  if (surrogates.empty()) throw Error(ErrorCode::kPrecondition, "at least one surrogate is required");
  if (n == 0 || n % 2 != 0) {
    throw Error(ErrorCode::kInfeasible, "label-balance quota: n must be even and positive, got " +
                                            std::to_string(n));
  }
  const double agree_exact = target_fidelity * static_cast<double>(n);
  const auto agree_total = static_cast<std::size_t>(std::llround(agree_exact));
  if (std::fabs(agree_exact - static_cast<double>(agree_total)) > 1e-9) {
    std::ostringstream msg;
    msg << "fidelity quota: " << target_fidelity << " * " << n << " = " << agree_exact
        << " is not an integral count of agreeing instances";
    throw Error(ErrorCode::kInfeasible, msg.str());
  }
  const std::size_t half = n / 2;
  const std::size_t disagree_total = n - agree_total;
  // Index 0 = AI label -1, index 1 = AI label +1.
  const std::array<std::size_t, 2> disagree_quota{disagree_total / 2, disagree_total - disagree_total / 2};
  if (disagree_quota[0] > half || disagree_quota[1] > half) {
    throw Error(ErrorCode::kInfeasible, "disagreement quota exceeds the per-label quota");
  }

  std::array<std::vector<std::size_t>, 2> agree;
  std::array<std::vector<std::size_t>, 2> disagree;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const Label y = ai(pool[i]);
    std::size_t n_agree = 0;
    for (const auto& s : surrogates) n_agree += s(pool[i]) == y;
    const std::size_t cls = y == Label::Positive ? 1 : 0;
    if (n_agree == surrogates.size()) {
      agree[cls].push_back(i);
    } else if (n_agree == 0) {
      disagree[cls].push_back(i);
    }
  }

  Rng rng(seed);
  std::vector<std::size_t> chosen;
  for (std::size_t cls = 0; cls < 2; ++cls) {
    const char* name = cls == 1 ? "+1" : "-1";
    const std::size_t need_agree = half - disagree_quota[cls];
    if (disagree[cls].size() < disagree_quota[cls]) {
      std::ostringstream msg;
      msg << "disagreement quota for AI label " << name << ": need " << disagree_quota[cls]
          << ", pool has " << disagree[cls].size();
      throw Error(ErrorCode::kInfeasible, msg.str());
    }
    if (agree[cls].size() < need_agree) {
      std::ostringstream msg;
      msg << "agreement quota for AI label " << name << ": need " << need_agree << ", pool has "
          << agree[cls].size();
      throw Error(ErrorCode::kInfeasible, msg.str());
    }
    std::shuffle(agree[cls].begin(), agree[cls].end(), rng);
    std::shuffle(disagree[cls].begin(), disagree[cls].end(), rng);
    chosen.insert(chosen.end(), agree[cls].begin(), agree[cls].begin() + static_cast<std::ptrdiff_t>(need_agree));
    chosen.insert(chosen.end(), disagree[cls].begin(),
                  disagree[cls].begin() + static_cast<std::ptrdiff_t>(disagree_quota[cls]));
  }
  std::shuffle(chosen.begin(), chosen.end(), rng);

  TrialPool out;
  std::size_t positives = 0;
  std::size_t agreeing = 0;
  for (auto i : chosen) {
    out.instances.push_back(pool[i]);
    const Label y = ai(pool[i]);
    const Label s = surrogates.front()(pool[i]);
    out.ai_labels.push_back(y);
    out.surrogate_labels.push_back(s);
    positives += y == Label::Positive;
    agreeing += y == s;
  }
  out.balance = static_cast<double>(positives) / static_cast<double>(n);
  out.fidelity = static_cast<double>(agreeing) / static_cast<double>(n);
  return out;
}

}  // namespace coxam
