#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace coxam::cli {

/// Sample mean with a percentile bootstrap interval. Empty input gives NaNs and n = 0.
struct Interval {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
  int n = 0;
};

/// Deterministic for a given seed; one value yields a zero-width interval.
Interval bootstrap_mean(std::span<const double> values, int resamples, std::uint64_t seed, double level = 0.95);

struct Bar {
  std::string series;
  Interval value;
};
struct BarGroup {
  std::string label;
  std::vector<Bar> bars;
};

/// Grouped bars with interval whiskers; series share a colour across groups.
std::string svg_bar_chart(const std::string& title, const std::string& y_label, const std::vector<BarGroup>& groups);

struct LineSeries {
  std::string name;
  /// (x, interval) points, drawn in x order with a shaded band.
  std::vector<std::pair<double, Interval>> points;
};

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<LineSeries>& series);

}  // namespace coxam::cli
