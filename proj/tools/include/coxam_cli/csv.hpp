#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "coxam/common.hpp"

namespace coxam::cli {

/// Shortest round-trip text for a double; NaN becomes an empty cell.
inline std::string num(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

/// Buffers rows and writes RFC 4180 CSV; every row must match the header width.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : width_(header.size()) { append(header); }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw Error(ErrorCode::kInvariant, "csv row width does not match its header");
    append(cells);
  }

  std::string str() const { return text_.str(); }

  void save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text_.str();
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }

 private:
  void append(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) text_ << ',';
      const std::string& c = cells[i];
      if (c.find_first_of(",\"\n\r") == std::string::npos) {
        text_ << c;
        continue;
      }
      text_ << '"';
      for (char ch : c) {
        if (ch == '"') text_ << '"';
        text_ << ch;
      }
      text_ << '"';
    }
    text_ << '\n';
  }

  std::size_t width_;
  std::ostringstream text_;
};

}  // namespace coxam::cli
