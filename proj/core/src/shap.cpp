#include "coxam/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <vector>

namespace coxam {
namespace {

constexpr unsigned kCoalitions = 1u << kNumAttributes;

void require_background(std::span<const Instance> background) {
  if (background.empty()) throw Error(ErrorCode::kPrecondition, "shapley values need a non-empty background");
}

Instance blend(const Instance& x, const Instance& b, unsigned mask) {
  Instance z = b;
  for (std::size_t a = 0; a < kNumAttributes; ++a) {
    if (mask & (1u << a)) z[a] = x[a];
  }
  return z;
}

}  // namespace

Instance exact_shapley(const ScalarModel& f, const Instance& x, std::span<const Instance> background) {
  require_background(background);
  std::array<double, kCoalitions> value{};
  for (unsigned mask = 0; mask < kCoalitions; ++mask) {
    double total = 0.0;
    for (const auto& b : background) total += f(blend(x, b, mask));
    value[mask] = total / static_cast<double>(background.size());
  }
  std::array<double, kNumAttributes + 1> factorial{1.0};
  for (std::size_t i = 1; i <= kNumAttributes; ++i) factorial[i] = factorial[i - 1] * static_cast<double>(i);
  Instance phi{};
  for (std::size_t a = 0; a < kNumAttributes; ++a) {
    const unsigned bit = 1u << a;
    for (unsigned mask = 0; mask < kCoalitions; ++mask) {
      if (mask & bit) continue;
      const auto s = static_cast<std::size_t>(std::popcount(mask));
      const double w = factorial[s] * factorial[kNumAttributes - s - 1] / factorial[kNumAttributes];
      phi[a] += w * (value[mask | bit] - value[mask]);
    }
  }
  return phi;
}

Instance sampled_shapley(const ScalarModel& f, const Instance& x, std::span<const Instance> background,
                         int n_samples, Rng& rng) {
  require_background(background);
  if (n_samples < 1) throw Error(ErrorCode::kPrecondition, "at least one Monte Carlo sample is required");
  std::vector<std::size_t> rows(background.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::array<std::size_t, kNumAttributes> order{};
  std::iota(order.begin(), order.end(), std::size_t{0});
  Instance phi{};
  for (int s = 0; s < n_samples; ++s) {
    const auto cycle = static_cast<std::size_t>(s) % rows.size();
    if (cycle == 0) std::shuffle(rows.begin(), rows.end(), rng);
    std::shuffle(order.begin(), order.end(), rng);
    Instance z = background[rows[cycle]];
    double previous = f(z);
    for (const std::size_t a : order) {
      z[a] = x[a];
      const double current = f(z);
      phi[a] += current - previous;
      previous = current;
    }
  }
  for (auto& v : phi) v /= static_cast<double>(n_samples);
  return phi;
}

GlobalShap global_shap(const ScalarModel& f, std::span<const Instance> instances, std::span<const Instance> background,
                       int n_samples, Rng& rng, int repeats) {
  if (instances.empty()) throw Error(ErrorCode::kPrecondition, "global importance needs at least one instance");
  if (repeats < 2) throw Error(ErrorCode::kPrecondition, "stability check needs at least two repeats");
  std::vector<Instance> runs(static_cast<std::size_t>(repeats), Instance{});
  for (auto& run : runs) {
    for (const auto& x : instances) {
      const Instance phi = sampled_shapley(f, x, background, n_samples, rng);
      for (std::size_t a = 0; a < kNumAttributes; ++a) run[a] += std::abs(phi[a]);
    }
    for (auto& v : run) v /= static_cast<double>(instances.size());
  }
  GlobalShap g;
  for (std::size_t a = 0; a < kNumAttributes; ++a) {
    double mean = 0.0;
    for (const auto& run : runs) mean += run[a];
    mean /= static_cast<double>(repeats);
    double var = 0.0;
    for (const auto& run : runs) var += (run[a] - mean) * (run[a] - mean);
    var /= static_cast<double>(repeats - 1);
    g.importance[a] = mean;
    if (mean > 0.0) g.max_cv = std::max(g.max_cv, std::sqrt(var) / mean);
  }
  const double total = std::accumulate(g.importance.begin(), g.importance.end(), 0.0);
  for (std::size_t a = 0; a < kNumAttributes; ++a) {
    g.selection[a] = total > 0.0 ? g.importance[a] / total : 1.0 / static_cast<double>(kNumAttributes);
  }
  if (g.max_cv > 0.1) {
    g.unstable = true;
    g.warning = "importance varies by " + std::to_string(static_cast<int>(std::round(100.0 * g.max_cv))) +
                "% across repeats; raise n_samples";
  }
  return g;
}

}  // namespace coxam
