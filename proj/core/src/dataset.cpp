#include "coxam/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace coxam {
namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

// RFC 4180 cells: quotes delimit, a doubled quote inside quotes is a literal quote.
std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '"') {
      if (quoted && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else {
        quoted = !quoted;
      }
    } else if (c == delimiter && !quoted) {
      out.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  out.push_back(trim(cell));
  return out;
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "?" || cell == "nan";
}

std::optional<double> parse_number(const std::string& cell) {
  if (is_missing(cell)) return std::nullopt;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, "non-numeric cell '" + cell + "'");
  }
  if (used != cell.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::kParse, "non-numeric cell '" + cell + "'");
  }
  return v;
}

double clipped_normal(Rng& rng, double mean, double sd, double lo, double hi) {
  std::normal_distribution<double> dist(mean, sd);
  return std::clamp(dist(rng), lo, hi);
}

AttributeSpecs make_specs(const std::array<const char*, kNumAttributes>& names,
                          const std::array<std::pair<double, double>, kNumAttributes>& ranges) {
  AttributeSpecs specs;
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    specs[i].name = names[i];
    specs[i].index = i;
    specs[i].min = ranges[i].first;
    specs[i].max = ranges[i].second;
  }
  return specs;
}

}  // namespace

void validate_specs(const AttributeSpecs& specs) {
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    if (specs[i].index != i) {
      throw Error(ErrorCode::kInvariant, "attribute indices must be contiguous 0..5");
    }
    if (!(specs[i].min < specs[i].max)) {
      throw Error(ErrorCode::kInvariant, "attribute '" + specs[i].name + "' has min >= max");
    }
  }
}

Label TargetRule::apply(const std::string& cell) const {
  if (positive_value) return cell == *positive_value ? Label::Positive : Label::Negative;
  const auto v = parse_number(cell);
  if (!v) throw Error(ErrorCode::kParse, "missing target");
  return *v >= threshold.value_or(0.0) ? Label::Positive : Label::Negative;
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw Error(ErrorCode::kConfig, "column '" + name + "' not found in CSV header");
  }
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(const std::string& text, char delimiter) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      // Strip a UTF-8 byte-order mark.
      if (line.rfind("\xEF\xBB\xBF", 0) == 0) line = line.substr(3);
      table.header = split_line(line, delimiter);
      first = false;
      continue;
    }
    if (trim(line).empty()) continue;
    table.rows.push_back(split_line(line, delimiter));
  }
  if (first) throw Error(ErrorCode::kParse, "CSV is empty (no header row)");
  return table;
}

CsvTable read_csv(const std::string& path, char delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open CSV '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), delimiter);
}

Dataset::Dataset(AttributeSpecs attributes, std::vector<Instance> rows, std::vector<Label> targets,
                 std::uint64_t split_seed)
    : attributes_(std::move(attributes)), rows_(std::move(rows)), targets_(std::move(targets)) {
  validate_specs(attributes_);
  if (rows_.size() != targets_.size()) {
    throw Error(ErrorCode::kInvariant, "rows and targets differ in length");
  }
  std::vector<std::size_t> order(rows_.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(split_seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(order.size())));
  train_.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  test_.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
}

std::vector<Instance> Dataset::train_rows() const {
  std::vector<Instance> out;
  out.reserve(train_.size());
  for (auto i : train_) out.push_back(rows_[i]);
  return out;
}

std::vector<Instance> Dataset::test_rows() const {
  std::vector<Instance> out;
  out.reserve(test_.size());
  for (auto i : test_) out.push_back(rows_[i]);
  return out;
}

Dataset ingest_table(const CsvTable& table, const std::vector<std::string>& attr_names,
                     const TargetRule& target_rule, std::uint64_t seed, IngestReport* report) {
  if (attr_names.size() != kNumAttributes) {
    throw Error(ErrorCode::kConfig, "exactly 6 attribute names are required, got " +
                                        std::to_string(attr_names.size()));
  }
  std::array<std::size_t, kNumAttributes> cols{};
  for (std::size_t i = 0; i < kNumAttributes; ++i) cols[i] = table.column(attr_names[i]);
  const std::size_t target_col = table.column(target_rule.column);

  std::vector<Instance> rows;
  std::vector<Label> targets;
  std::size_t dropped = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    // Data rows are numbered from 1; the header is row 0.
    const auto row_number = r + 1;
    Instance x{};
    bool missing = false;
    for (std::size_t i = 0; i < kNumAttributes; ++i) {
      if (cols[i] >= cells.size()) {
        missing = true;
        break;
      }
      try {
        const auto v = parse_number(cells[cols[i]]);
        if (!v) {
          missing = true;
          break;
        }
        x[i] = *v;
      } catch (const Error& e) {
        throw Error(ErrorCode::kParse, "row " + std::to_string(row_number) + ", column '" +
                                           attr_names[i] + "': " + e.what());
      }
    }
    if (missing || target_col >= cells.size() || is_missing(cells[target_col])) {
      ++dropped;
      continue;
    }
    try {
      targets.push_back(target_rule.apply(cells[target_col]));
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse,
                  "row " + std::to_string(row_number) + ", target: " + e.what());
    }
    rows.push_back(x);
  }
  if (rows.size() < kMinUsableRows) {
    throw Error(ErrorCode::kDatasetTooSmall, "only " + std::to_string(rows.size()) +
                                                 " usable rows; at least 50 are required");
  }
  AttributeSpecs specs;
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    specs[i].name = attr_names[i];
    specs[i].index = i;
    specs[i].min = rows[0][i];
    specs[i].max = rows[0][i];
    for (const auto& x : rows) {
      specs[i].min = std::min(specs[i].min, x[i]);
      specs[i].max = std::max(specs[i].max, x[i]);
    }
    if (!(specs[i].min < specs[i].max)) {
      throw Error(ErrorCode::kConfig, "attribute '" + attr_names[i] + "' is constant");
    }
  }
  if (report) {
    report->rows_read = table.rows.size();
    report->rows_dropped = dropped;
  }
  return Dataset(std::move(specs), std::move(rows), std::move(targets), seed);
}

Dataset ingest_csv(const std::string& path, const std::vector<std::string>& attr_names,
                   const TargetRule& target_rule, std::uint64_t seed, char delimiter,
                   IngestReport* report) {
  return ingest_table(read_csv(path, delimiter), attr_names, target_rule, seed, report);
}

std::vector<std::string> select_attributes_by_mutual_information(const CsvTable& table,
                                                                 const TargetRule& target_rule,
                                                                 std::size_t k, int bins) {
  const std::size_t target_col = table.column(target_rule.column);
  std::vector<Label> labels(table.rows.size(), Label::Negative);
  std::vector<bool> usable(table.rows.size(), true);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    if (target_col >= cells.size() || is_missing(cells[target_col])) {
      usable[r] = false;
      continue;
    }
    labels[r] = target_rule.apply(cells[target_col]);
  }

  std::vector<std::pair<double, std::string>> scored;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == target_col) continue;
    std::vector<std::pair<double, Label>> values;
    bool numeric = true;
    for (std::size_t r = 0; r < table.rows.size() && numeric; ++r) {
      if (!usable[r] || c >= table.rows[r].size()) continue;
      try {
        if (const auto v = parse_number(table.rows[r][c])) values.emplace_back(*v, labels[r]);
      } catch (const Error&) {
        numeric = false;
      }
    }
    if (!numeric || values.size() < 2) continue;
    const auto [lo_it, hi_it] = std::minmax_element(
        values.begin(), values.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    const double lo = lo_it->first;
    const double hi = hi_it->first;
    if (!(lo < hi)) continue;
    std::vector<std::array<double, 2>> joint(static_cast<std::size_t>(bins), {0.0, 0.0});
    for (const auto& [v, y] : values) {
      auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * bins);
      b = std::min(b, static_cast<std::size_t>(bins - 1));
      joint[b][y == Label::Positive ? 1 : 0] += 1.0;
    }
    const double n = static_cast<double>(values.size());
    std::array<double, 2> py{0.0, 0.0};
    for (const auto& cell : joint) {
      py[0] += cell[0];
      py[1] += cell[1];
    }
    double mi = 0.0;
    for (const auto& cell : joint) {
      const double px = (cell[0] + cell[1]) / n;
      for (int y = 0; y < 2; ++y) {
        const double pxy = cell[y] / n;
        if (pxy > 0.0) mi += pxy * std::log(pxy / (px * py[y] / n));
      }
    }
    scored.emplace_back(mi, table.header[c]);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  if (scored.size() < k) {
    throw Error(ErrorCode::kConfig, "fewer than " + std::to_string(k) + " numeric attribute columns");
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(scored[i].second);
  return out;
}

std::optional<SyntheticKind> parse_synthetic_kind(std::string_view name) {
  if (name == "wine" || name == "wine-like") return SyntheticKind::kWineLike;
  if (name == "mushrooms" || name == "mushroom-like") return SyntheticKind::kMushroomLike;
  if (name == "linear" || name == "synthetic") return SyntheticKind::kLinear;
  if (name == "tree") return SyntheticKind::kTree;
  return std::nullopt;
}

std::string_view synthetic_kind_name(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::kWineLike: return "wine-like";
    case SyntheticKind::kMushroomLike: return "mushroom-like";
    case SyntheticKind::kLinear: return "linear";
    case SyntheticKind::kTree: return "tree";
  }
  return "unknown";
}

Dataset make_synthetic_dataset(SyntheticKind kind, std::size_t n_rows, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Instance> rows;
  std::vector<Label> targets;
  rows.reserve(n_rows);
  targets.reserve(n_rows);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  AttributeSpecs specs;
  switch (kind) {
    case SyntheticKind::kWineLike:
      specs = make_specs({"Alcohol", "Volatile Acidity", "Sulphates", "Residual Sugar",
                          "Chlorides", "Density"},
                         {{{8.0, 14.2}, {0.08, 1.1}, {0.22, 1.08}, {0.6, 20.0}, {0.009, 0.346},
                           {0.987, 1.004}}});
      for (std::size_t n = 0; n < n_rows; ++n) {
        Instance x{};
        x[0] = clipped_normal(rng, 10.5, 1.2, 8.0, 14.2);
        x[1] = clipped_normal(rng, 0.33, 0.15, 0.08, 1.1);
        x[2] = clipped_normal(rng, 0.5, 0.12, 0.22, 1.08);
        x[3] = clipped_normal(rng, 6.0, 4.5, 0.6, 20.0);
        x[4] = clipped_normal(rng, 0.05, 0.03, 0.009, 0.346);
        // Density falls with alcohol, as in real wine.
        x[5] = std::clamp(1.012 - 0.0017 * x[0] + 0.0004 * x[3] + 0.0015 * noise(rng), 0.987, 1.004);
        const double score = 1.1 * (x[0] - 10.5) - 5.5 * (x[1] - 0.33) + 3.0 * (x[2] - 0.5) +
                             0.04 * (x[3] - 6.0) - 8.0 * (x[4] - 0.05) + 0.35 * noise(rng);
        rows.push_back(x);
        targets.push_back(label_from_sign(score));
      }
      break;
    case SyntheticKind::kMushroomLike:
      specs = make_specs({"Cap Diameter", "Stem Height", "Stem Width", "Gill Spacing",
                          "Ring Number", "Odor"},
                         {{{1.0, 30.0}, {1.0, 20.0}, {1.0, 40.0}, {0.0, 2.0}, {0.0, 3.0}, {0.0, 8.0}}});
      for (std::size_t n = 0; n < n_rows; ++n) {
        Instance x{};
        x[0] = clipped_normal(rng, 9.0, 5.0, 1.0, 30.0);
        x[1] = clipped_normal(rng, 7.0, 3.5, 1.0, 20.0);
        x[2] = clipped_normal(rng, 14.0, 8.0, 1.0, 40.0);
        x[3] = std::floor(unit(rng) * 3.0);
        x[4] = std::floor(unit(rng) * 4.0);
        x[5] = std::floor(unit(rng) * 9.0);
        bool poisonous = false;
        if (x[5] >= 5.0) {
          poisonous = x[2] < 22.0;
        } else {
          poisonous = x[0] > 11.0 && x[1] < 8.0;
        }
        if (unit(rng) < 0.06) poisonous = !poisonous;
        rows.push_back(x);
        targets.push_back(poisonous ? Label::Positive : Label::Negative);
      }
      break;
    case SyntheticKind::kLinear: {
      specs = make_specs({"A1", "A2", "A3", "A4", "A5", "A6"},
                         {{{0.0, 10.0}, {0.0, 10.0}, {0.0, 10.0}, {0.0, 10.0}, {0.0, 10.0}, {0.0, 10.0}}});
      std::array<double, kNumAttributes> w{};
      for (auto& wi : w) wi = noise(rng);
      for (std::size_t n = 0; n < n_rows; ++n) {
        Instance x{};
        double score = 0.0;
        for (std::size_t i = 0; i < kNumAttributes; ++i) {
          x[i] = 10.0 * unit(rng);
          score += w[i] * (x[i] - 5.0);
        }
        score += 0.8 * noise(rng);
        rows.push_back(x);
        targets.push_back(label_from_sign(score));
      }
      break;
    }
    case SyntheticKind::kTree: {
      specs = make_specs({"B1", "B2", "B3", "B4", "B5", "B6"},
                         {{{0.0, 10.0}, {0.0, 10.0}, {0.0, 10.0}, {0.0, 10.0}, {0.0, 10.0}, {0.0, 10.0}}});
      std::array<std::size_t, 3> attr{};
      std::array<double, 3> thr{};
      std::uniform_int_distribution<std::size_t> pick(0, kNumAttributes - 1);
      for (std::size_t i = 0; i < 3; ++i) {
        attr[i] = pick(rng);
        thr[i] = 3.0 + 4.0 * unit(rng);
      }
      for (std::size_t n = 0; n < n_rows; ++n) {
        Instance x{};
        for (auto& xi : x) xi = 10.0 * unit(rng);
        bool pos = x[attr[0]] < thr[0] ? x[attr[1]] >= thr[1] : x[attr[2]] < thr[2];
        if (unit(rng) < 0.05) pos = !pos;
        rows.push_back(x);
        targets.push_back(pos ? Label::Positive : Label::Negative);
      }
      break;
    }
  }
  // Tighten ranges to the observed data, as ingestion does.
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    double lo = rows.front()[i];
    double hi = rows.front()[i];
    for (const auto& x : rows) {
      lo = std::min(lo, x[i]);
      hi = std::max(hi, x[i]);
    }
    if (lo < hi) {
      specs[i].min = lo;
      specs[i].max = hi;
    }
  }
  return Dataset(std::move(specs), std::move(rows), std::move(targets), derive_seed(seed, 7));
}

void write_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  out.precision(10);
  for (const auto& spec : dataset.attributes()) out << spec.name << ',';
  out << "target\n";
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    for (double v : dataset.rows()[r]) out << v << ',';
    out << to_int(dataset.targets()[r]) << '\n';
  }
}

}  // namespace coxam
