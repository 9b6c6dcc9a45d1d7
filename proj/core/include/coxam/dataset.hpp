#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coxam/common.hpp"

namespace coxam {

struct AttributeSpec {
  std::string name;
  std::size_t index = 0;
  double min = 0.0;
  double max = 1.0;
  std::optional<std::string> display_unit;

  double range() const { return max - min; }
  /// Maps a raw value onto [0, 1] by the attribute range.
  double unit(double x) const { return (x - min) / range(); }
  /// Maps a raw value onto [-1, 1], centred on the middle of the range.
  double centered(double x) const { return 2.0 * unit(x) - 1.0; }
  double clamp(double x) const { return x < min ? min : (x > max ? max : x); }
};

using AttributeSpecs = std::array<AttributeSpec, kNumAttributes>;

void validate_specs(const AttributeSpecs& specs);

/// How the raw target column becomes a binary label.
struct TargetRule {
  std::string column;
  /// If set, numeric targets >= threshold map to +1.
  std::optional<double> threshold;
  /// If set, targets equal to this text map to +1 (anything else to -1).
  std::optional<std::string> positive_value;

  Label apply(const std::string& cell) const;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path, char delimiter = ',');
CsvTable parse_csv(const std::string& text, char delimiter = ',');

/// Immutable after construction; safe to share between threads.
class Dataset {
 public:
  Dataset(AttributeSpecs attributes, std::vector<Instance> rows, std::vector<Label> targets,
          std::uint64_t split_seed);

  const AttributeSpecs& attributes() const { return attributes_; }
  const std::vector<Instance>& rows() const { return rows_; }
  const std::vector<Label>& targets() const { return targets_; }
  const std::vector<std::size_t>& train_indices() const { return train_; }
  const std::vector<std::size_t>& test_indices() const { return test_; }
  std::size_t size() const { return rows_.size(); }

  std::vector<Instance> train_rows() const;
  std::vector<Instance> test_rows() const;

 private:
  AttributeSpecs attributes_;
  std::vector<Instance> rows_;
  std::vector<Label> targets_;
  std::vector<std::size_t> train_;
  std::vector<std::size_t> test_;
};

inline constexpr std::size_t kMinUsableRows = 50;

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
};

/// Parses `table` into a Dataset using the named attributes. Attribute ranges come from the
/// observed data; rows with missing cells are dropped; an 80/20 split is drawn from `seed`.
Dataset ingest_table(const CsvTable& table, const std::vector<std::string>& attr_names,
                     const TargetRule& target_rule, std::uint64_t seed,
                     IngestReport* report = nullptr);

Dataset ingest_csv(const std::string& path, const std::vector<std::string>& attr_names,
                   const TargetRule& target_rule, std::uint64_t seed, char delimiter = ',',
                   IngestReport* report = nullptr);

/// Ranks the numeric non-target columns by mutual information with the binarized target
/// (equal-width histogram estimate) and returns the top `k` names, best first.
std::vector<std::string> select_attributes_by_mutual_information(const CsvTable& table,
                                                                 const TargetRule& target_rule,
                                                                 std::size_t k = kNumAttributes,
                                                                 int bins = 10);

enum class SyntheticKind {
  kWineLike,      // mostly linear ground truth over wine-style attribute ranges
  kMushroomLike,  // threshold-structured ground truth
  kLinear,        // auxiliary: linear-dominant
  kTree,          // auxiliary: tree-dominant
};

std::optional<SyntheticKind> parse_synthetic_kind(std::string_view name);
std::string_view synthetic_kind_name(SyntheticKind kind);

Dataset make_synthetic_dataset(SyntheticKind kind, std::size_t n_rows, std::uint64_t seed);

/// Writes a dataset as CSV with a `target` column of -1/+1.
void write_csv(const Dataset& dataset, const std::string& path);

}  // namespace coxam
