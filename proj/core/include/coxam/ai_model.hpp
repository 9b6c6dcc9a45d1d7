#pragma once

#include <cstdint>
#include <vector>

#include "coxam/common.hpp"
#include "coxam/dataset.hpp"

namespace coxam {

/// One-hidden-layer feedforward classifier with a sigmoid output; the ground-truth "AI".
class AiModel {
 public:
  AiModel() = default;
  AiModel(std::size_t hidden_units, Instance input_mean, Instance input_scale);

  /// Probability of the positive class, always strictly inside (0, 1).
  double probability(const Instance& x) const;
  Label predict(const Instance& x) const { return probability(x) >= 0.5 ? Label::Positive : Label::Negative; }

  std::size_t hidden_units() const { return hidden_bias_.size(); }

  // Parameters are public data for serialization and training.
  Instance input_mean{};
  Instance input_scale{};
  /// hidden_units x kNumAttributes, row-major.
  std::vector<double> hidden_weights_;
  std::vector<double> hidden_bias_;
  std::vector<double> output_weights_;
  double output_bias_ = 0.0;

  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  /// Set when test accuracy does not beat the majority-class rate.
  bool non_converged = false;
};

struct TrainConfig {
  std::size_t hidden_units = 16;
  std::size_t epochs = 60;
  double learning_rate = 0.05;
  std::uint64_t seed = 1;
};

/// Plain per-example SGD on cross-entropy; bit-identical for a fixed seed.
AiModel train_ai(const Dataset& dataset, const TrainConfig& config);

double accuracy(const AiModel& model, const std::vector<Instance>& rows,
                const std::vector<Label>& labels);

}  // namespace coxam
