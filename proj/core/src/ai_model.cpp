#include "coxam/ai_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace coxam {

AiModel::AiModel(std::size_t hidden_units, Instance mean, Instance scale)
    : input_mean(mean),
      input_scale(scale),
      hidden_weights_(hidden_units * kNumAttributes, 0.0),
      hidden_bias_(hidden_units, 0.0),
      output_weights_(hidden_units, 0.0) {}

double AiModel::probability(const Instance& x) const {
  Instance z{};
  for (std::size_t i = 0; i < kNumAttributes; ++i) z[i] = (x[i] - input_mean[i]) / input_scale[i];
  double out = output_bias_;
  const std::size_t h = hidden_bias_.size();
  for (std::size_t j = 0; j < h; ++j) {
    double a = hidden_bias_[j];
    const double* w = &hidden_weights_[j * kNumAttributes];
    for (std::size_t i = 0; i < kNumAttributes; ++i) a += w[i] * z[i];
    out += output_weights_[j] * std::tanh(a);
  }
  // Keep the output strictly inside (0, 1) so downstream log-likelihoods stay finite.
  return std::clamp(logistic(out), 1e-12, 1.0 - 1e-12);
}

double accuracy(const AiModel& model, const std::vector<Instance>& rows,
                const std::vector<Label>& labels) {
  if (rows.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) hits += model.predict(rows[i]) == labels[i];
  return static_cast<double>(hits) / static_cast<double>(rows.size());
}

AiModel train_ai(const Dataset& dataset, const TrainConfig& config) {
  if (config.hidden_units == 0 || config.epochs == 0) {
    throw Error(ErrorCode::kPrecondition, "hidden_units and epochs must be positive");
  }
  const auto& train = dataset.train_indices();
  if (train.empty()) throw Error(ErrorCode::kPrecondition, "dataset has no training split");

  Instance mean{};
  Instance scale{};
  for (auto idx : train) {
    for (std::size_t i = 0; i < kNumAttributes; ++i) mean[i] += dataset.rows()[idx][i];
  }
  for (auto& m : mean) m /= static_cast<double>(train.size());
  for (auto idx : train) {
    for (std::size_t i = 0; i < kNumAttributes; ++i) {
      const double d = dataset.rows()[idx][i] - mean[i];
      scale[i] += d * d;
    }
  }
  for (auto& s : scale) {
    s = std::sqrt(s / static_cast<double>(train.size()));
    if (s <= 0.0) s = 1.0;
  }

  const std::size_t h = config.hidden_units;
  AiModel model(h, mean, scale);
  Rng rng(config.seed);
  std::normal_distribution<double> init(0.0, 1.0 / std::sqrt(static_cast<double>(kNumAttributes)));
  for (auto& w : model.hidden_weights_) w = init(rng);
  std::normal_distribution<double> init_out(0.0, 1.0 / std::sqrt(static_cast<double>(h)));
  for (auto& w : model.output_weights_) w = init_out(rng);

  std::vector<std::size_t> order(train.begin(), train.end());
  std::vector<double> hidden(h);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (auto idx : order) {
      const Instance& x = dataset.rows()[idx];
      Instance z{};
      for (std::size_t i = 0; i < kNumAttributes; ++i) z[i] = (x[i] - mean[i]) / scale[i];
      double out = model.output_bias_;
      for (std::size_t j = 0; j < h; ++j) {
        double a = model.hidden_bias_[j];
        for (std::size_t i = 0; i < kNumAttributes; ++i) a += model.hidden_weights_[j * kNumAttributes + i] * z[i];
        hidden[j] = std::tanh(a);
        out += model.output_weights_[j] * hidden[j];
      }
      const double y = dataset.targets()[idx] == Label::Positive ? 1.0 : 0.0;
      const double delta = logistic(out) - y;
      const double lr = config.learning_rate;
      for (std::size_t j = 0; j < h; ++j) {
        const double back = delta * model.output_weights_[j] * (1.0 - hidden[j] * hidden[j]);
        model.output_weights_[j] -= lr * delta * hidden[j];
        model.hidden_bias_[j] -= lr * back;
        for (std::size_t i = 0; i < kNumAttributes; ++i) {
          model.hidden_weights_[j * kNumAttributes + i] -= lr * back * z[i];
        }
      }
      model.output_bias_ -= lr * delta;
    }
  }

  std::vector<Label> train_labels;
  for (auto idx : train) train_labels.push_back(dataset.targets()[idx]);
  model.train_accuracy = accuracy(model, dataset.train_rows(), train_labels);
  std::vector<Label> test_labels;
  for (auto idx : dataset.test_indices()) test_labels.push_back(dataset.targets()[idx]);
  const auto test_rows = dataset.test_rows();
  model.test_accuracy = test_rows.empty() ? model.train_accuracy : accuracy(model, test_rows, test_labels);
  const auto& eval_labels = test_rows.empty() ? train_labels : test_labels;
  const auto positives = static_cast<double>(
      std::count(eval_labels.begin(), eval_labels.end(), Label::Positive));
  const double majority =
      std::max(positives, static_cast<double>(eval_labels.size()) - positives) /
      static_cast<double>(std::max<std::size_t>(eval_labels.size(), 1));
  // A perfect classifier on a single-class split is still converged.
  model.non_converged = model.test_accuracy <= majority && model.test_accuracy < 1.0;
  return model;
}

}  // namespace coxam
