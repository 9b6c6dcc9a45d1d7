#include "coxam_cli/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "coxam/common.hpp"
#include "coxam/dataset.hpp"
#include "coxam_cli/commands.hpp"
#include "coxam_cli/csv.hpp"

namespace coxam::cli {

namespace fs = std::filesystem;

Interval bootstrap_mean(std::span<const double> values, int resamples, std::uint64_t seed, double level) {
  Interval out;
  out.n = static_cast<int>(values.size());
  if (values.empty()) {
    out.mean = out.low = out.high = std::nan("");
    return out;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() == 1 || resamples < 2) {
    out.low = out.high = out.mean;
    return out;
  }
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += values[pick(rng)];
    m = s / static_cast<double>(values.size());
  }
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - level) / 2.0;
  const auto at = [&](double q) {
    const auto i = static_cast<std::size_t>(std::clamp(q * (resamples - 1), 0.0, resamples - 1.0) + 0.5);
    return means[std::min(i, means.size() - 1)];
  };
  out.low = at(tail);
  out.high = at(1.0 - tail);
  return out;
}

namespace {

constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#b07aa1", "#9c755f", "#edc948"};
constexpr double kWidth = 720.0, kHeight = 420.0, kLeft = 70.0, kRight = 170.0, kTop = 40.0, kBottom = 90.0;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  double lo, hi;
  double map(double v, double a, double b) const { return hi == lo ? (a + b) / 2 : a + (v - lo) / (hi - lo) * (b - a); }
};

Axis nice_axis(double lo, double hi, bool include_zero) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) return {0.0, 1.0};
  if (include_zero) lo = std::min(lo, 0.0);
  if (hi - lo < 1e-12) {
    hi += 0.5;
    lo -= include_zero && lo >= 0 ? 0.0 : 0.5;
  }
  const double pad = (hi - lo) * 0.05;
  return {include_zero && lo >= 0 ? lo : lo - pad, hi + pad};
}

void frame(std::ostringstream& s, const std::string& title, const std::string& y_label, const Axis& y) {
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n";
  const double x0 = kLeft, y0 = kHeight - kBottom, y1 = kTop;
  s << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double v = y.lo + (y.hi - y.lo) * t / 5.0;
    const double py = y.map(v, y0, y1);
    s << "<line x1=\"" << x0 - 4 << "\" y1=\"" << py << "\" x2=\"" << x0 << "\" y2=\"" << py << "\" stroke=\"black\"/>";
    s << "<text x=\"" << x0 - 6 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">" << num(std::round(v * 1000) / 1000)
      << "</text>\n";
  }
  s << "<text transform=\"translate(16," << (y0 + y1) / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << escape(y_label)
    << "</text>\n";
}

void legend(std::ostringstream& s, const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = kTop + 16.0 * static_cast<double>(i);
    s << "<rect x=\"" << kWidth - kRight + 12 << "\" y=\"" << y << "\" width=\"10\" height=\"10\" fill=\"" << kPalette[i % 8]
      << "\"/><text x=\"" << kWidth - kRight + 26 << "\" y=\"" << y + 9 << "\">" << escape(names[i]) << "</text>\n";
  }
}

}  // namespace

std::string svg_bar_chart(const std::string& title, const std::string& y_label, const std::vector<BarGroup>& groups) {
  std::vector<std::string> series;
  double lo = 0.0, hi = 0.0;
  for (const auto& g : groups) {
    for (const auto& b : g.bars) {
      if (std::find(series.begin(), series.end(), b.series) == series.end()) series.push_back(b.series);
      if (std::isfinite(b.value.high)) hi = std::max(hi, b.value.high);
      if (std::isfinite(b.value.low)) lo = std::min(lo, b.value.low);
    }
  }
  const Axis y = nice_axis(lo, hi, true);
  std::ostringstream s;
  frame(s, title, y_label, y);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  const double slot = groups.empty() ? 0.0 : (x1 - x0) / static_cast<double>(groups.size());
  const double bar = series.empty() ? 0.0 : slot * 0.8 / static_cast<double>(series.size());
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const double gx = x0 + slot * static_cast<double>(gi) + slot * 0.1;
    for (const auto& b : groups[gi].bars) {
      if (!std::isfinite(b.value.mean)) continue;
      const auto si = static_cast<std::size_t>(std::find(series.begin(), series.end(), b.series) - series.begin());
      const double bx = gx + bar * static_cast<double>(si);
      const double top = y.map(b.value.mean, y0, y1), base = y.map(0.0, y0, y1);
      s << "<rect x=\"" << bx << "\" y=\"" << std::min(top, base) << "\" width=\"" << bar * 0.9 << "\" height=\""
        << std::abs(base - top) << "\" fill=\"" << kPalette[si % 8] << "\"/>";
      const double cx = bx + bar * 0.45;
      s << "<line x1=\"" << cx << "\" y1=\"" << y.map(b.value.low, y0, y1) << "\" x2=\"" << cx << "\" y2=\""
        << y.map(b.value.high, y0, y1) << "\" stroke=\"black\"/>\n";
    }
    const double lx = x0 + slot * (static_cast<double>(gi) + 0.5);
    s << "<text transform=\"translate(" << lx << "," << y0 + 14 << ") rotate(20)\" text-anchor=\"start\">"
      << escape(groups[gi].label) << "</text>\n";
  }
  legend(s, series);
  s << "</svg>\n";
  return s.str();
}

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<LineSeries>& series) {
  double xl = INFINITY, xh = -INFINITY, yl = INFINITY, yh = -INFINITY;
  for (const auto& sr : series) {
    for (const auto& [x, v] : sr.points) {
      if (!std::isfinite(v.mean)) continue;
      xl = std::min(xl, x);
      xh = std::max(xh, x);
      yl = std::min(yl, v.low);
      yh = std::max(yh, v.high);
    }
  }
  const Axis y = nice_axis(yl, yh, false);
  const Axis x = std::isfinite(xl) ? Axis{xl, xh} : Axis{0.0, 1.0};
  std::ostringstream s;
  frame(s, title, y_label, y);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  for (int t = 0; t <= 4; ++t) {
    const double v = x.lo + (x.hi - x.lo) * t / 4.0;
    s << "<text x=\"" << x.map(v, x0, x1) << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">"
      << num(std::round(v * 1e4) / 1e4) << "</text>\n";
  }
  s << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << y0 + 40 << "\" text-anchor=\"middle\">" << escape(x_label)
    << "</text>\n";
  std::vector<std::string> names;
  for (std::size_t si = 0; si < series.size(); ++si) {
    names.push_back(series[si].name);
    auto pts = series[si].points;
    std::erase_if(pts, [](const auto& p) { return !std::isfinite(p.second.mean); });
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    if (pts.empty()) continue;
    std::ostringstream band, line;
    for (const auto& [px, v] : pts) band << x.map(px, x0, x1) << ',' << y.map(v.high, y0, y1) << ' ';
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) band << x.map(it->first, x0, x1) << ',' << y.map(it->second.low, y0, y1) << ' ';
    for (const auto& [px, v] : pts) line << x.map(px, x0, x1) << ',' << y.map(v.mean, y0, y1) << ' ';
    s << "<polygon points=\"" << band.str() << "\" fill=\"" << kPalette[si % 8] << "\" fill-opacity=\"0.2\"/>\n";
    s << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"" << kPalette[si % 8] << "\" stroke-width=\"2\"/>\n";
  }
  legend(s, names);
  s << "</svg>\n";
  return s.str();
}

namespace {

void save_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

std::optional<double> cell_value(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, "non-numeric report cell '" + s + "'");
  }
}

/// Groups numeric column values by a key built from other columns; rows with an empty cell are skipped.
template <typename Key>
std::map<Key, std::vector<double>> collect(const CsvTable& t, const std::string& column,
                                           const std::function<Key(const std::vector<std::string>&)>& key) {
  const std::size_t c = t.column(column);
  std::map<Key, std::vector<double>> out;
  for (const auto& row : t.rows) {
    if (const auto v = cell_value(row[c])) out[key(row)].push_back(*v);
  }
  return out;
}

class Reporter {
 public:
  Reporter(const RunConfig& config, fs::path dir) : config_(config), dir_(std::move(dir)) {}

  Interval interval(const std::vector<double>& values) {
    return bootstrap_mean(values, config_.bootstrap, derive_seed(config_.seed, 4100 + stream_++));
  }

  void write(const std::string& name, const CsvWriter& csv) { csv.save(dir_ / name); written_.push_back(name); }
  void write(const std::string& name, const std::string& svg) {
    save_text(dir_ / name, svg);
    written_.push_back(name);
  }
  const std::vector<std::string>& written() const { return written_; }

 private:
  const RunConfig& config_;
  fs::path dir_;
  std::uint64_t stream_ = 0;
  std::vector<std::string> written_;
};

using Key3 = std::tuple<std::string, std::string, std::string>;

std::string cell_label(const Key3& k, bool show_complexity) {
  return std::get<0>(k) + (show_complexity ? " " + std::get<1>(k) : "") + " " + std::get<2>(k);
}

void agent_tables(Reporter& rep, const CsvTable& agents) {
  const std::size_t sc = agents.column("scenario"), cc = agents.column("complexity"), dc = agents.column("condition");
  const std::function<Key3(const std::vector<std::string>&)> key = [&](const auto& r) {
    return Key3{r[sc], r[cc], r[dc]};
  };
  std::set<std::string> complexities;
  for (const auto& r : agents.rows) complexities.insert(r[cc]);
  const bool show_complexity = complexities.size() > 1;

  const auto with = collect(agents, "forward_with_xai", key);
  const auto without = collect(agents, "forward_without_xai", key);
  CsvWriter fwd({"scenario", "complexity", "condition", "visibility", "mean", "ci_low", "ci_high", "n"});
  std::vector<BarGroup> fwd_groups;
  std::set<Key3> keys;
  for (const auto& [k, v] : with) keys.insert(k);
  for (const auto& [k, v] : without) keys.insert(k);
  for (const auto& k : keys) {
    BarGroup g{cell_label(k, show_complexity), {}};
    for (const auto& [label, source] : {std::pair{"with XAI", &with}, std::pair{"without XAI", &without}}) {
      const auto it = source->find(k);
      const Interval iv = rep.interval(it == source->end() ? std::vector<double>{} : it->second);
      fwd.row({std::get<0>(k), std::get<1>(k), std::get<2>(k), label, num(iv.mean), num(iv.low), num(iv.high),
               std::to_string(iv.n)});
      g.bars.push_back({label, iv});
    }
    fwd_groups.push_back(std::move(g));
  }
  rep.write("forward_accuracy.csv", fwd);
  rep.write("forward_accuracy.svg", svg_bar_chart("Forward accuracy by schema and visibility", "agreement with AI", fwd_groups));

  const auto cf = collect(agents, "counterfactual_accuracy", key);
  CsvWriter cft({"scenario", "complexity", "condition", "mean", "ci_low", "ci_high", "n"});
  std::vector<BarGroup> cf_groups;
  for (const auto& [k, v] : cf) {
    const Interval iv = rep.interval(v);
    cft.row({std::get<0>(k), std::get<1>(k), std::get<2>(k), num(iv.mean), num(iv.low), num(iv.high), std::to_string(iv.n)});
    cf_groups.push_back({cell_label(k, show_complexity), {{"counterfactual", iv}}});
  }
  rep.write("counterfactual_accuracy.csv", cft);
  rep.write("counterfactual_accuracy.svg", svg_bar_chart("Counterfactual accuracy by schema", "flips the AI", cf_groups));
}

void strategy_tables(Reporter& rep, const CsvTable& trials) {
  const std::size_t pc = trials.column("phase"), sc = trials.column("strategy");
  const std::function<std::pair<std::string, std::string>(const std::vector<std::string>&)> key = [&](const auto& r) {
    return std::pair{r[pc], r[sc]};
  };
  const auto correct = collect(trials, "correct", key);
  std::map<std::string, std::size_t> phase_total;
  for (const auto& [k, v] : correct) phase_total[k.first] += v.size();
  CsvWriter csv({"phase", "strategy", "trials", "share", "accuracy", "ci_low", "ci_high"});
  std::map<std::string, std::vector<BarGroup>> charts;
  for (const auto& [k, v] : correct) {
    const Interval iv = rep.interval(v);
    csv.row({k.first, k.second, std::to_string(v.size()),
             num(static_cast<double>(v.size()) / static_cast<double>(phase_total[k.first])), num(iv.mean), num(iv.low),
             num(iv.high)});
    charts[k.first].push_back({k.second, {{"accuracy", iv}}});
  }
  rep.write("strategy_accuracy.csv", csv);
  for (const auto& [phase, groups] : charts) {
    rep.write("strategy_accuracy_" + phase + ".svg", svg_bar_chart("Accuracy by strategy (" + phase + ")", "accuracy", groups));
  }
}

void grid_tables(Reporter& rep, const fs::path& path) {
  const CsvTable t = read_csv(path.string());
  if (t.rows.empty()) return;
  const std::string parameter = t.rows.front()[t.column("parameter")];
  const std::size_t vc = t.column("value"), dc = t.column("condition");
  const std::function<std::pair<std::string, double>(const std::vector<std::string>&)> key = [&](const auto& r) {
    return std::pair{r[dc], std::stod(r[vc])};
  };
  CsvWriter csv({"parameter", "value", "condition", "metric", "mean", "ci_low", "ci_high", "n"});
  for (const char* metric : {"forward_with_xai", "forward_without_xai", "counterfactual_accuracy", "mean_subset_size",
                             "mean_forward_time_s"}) {
    std::map<std::string, LineSeries> series;
    for (const auto& [k, v] : collect(t, metric, key)) {
      const Interval iv = rep.interval(v);
      csv.row({parameter, num(k.second), k.first, metric, num(iv.mean), num(iv.low), num(iv.high), std::to_string(iv.n)});
      auto& s = series[k.first];
      s.name = k.first;
      s.points.emplace_back(k.second, iv);
    }
    std::vector<LineSeries> lines;
    for (auto& [n, s] : series) lines.push_back(std::move(s));
    rep.write("grid-" + parameter + "-" + metric + ".svg", svg_line_chart(std::string(metric) + " over " + parameter,
                                                                            parameter, metric, lines));
  }
  rep.write("grid-" + parameter + ".csv", csv);
}

void nll_tables(Reporter& rep, const CsvTable& scores) {
  const std::size_t pc = scores.column("phase"), sc = scores.column("scenario"), mc = scores.column("model");
  using Key = std::tuple<std::string, std::string, std::string>;
  const std::function<Key(const std::vector<std::string>&)> key = [&](const auto& r) { return Key{r[pc], r[sc], r[mc]}; };
  const auto nll = collect(scores, "nll", key);
  const auto bic = collect(scores, "bic", key);
  CsvWriter csv({"phase", "scenario", "model", "participants", "mean_nll", "ci_low", "ci_high", "mean_bic"});
  std::map<std::string, std::map<std::string, BarGroup>> charts;
  for (const auto& [k, v] : nll) {
    const Interval iv = rep.interval(v);
    const auto& b = bic.at(k);
    double mean_bic = 0.0;
    for (double x : b) mean_bic += x / static_cast<double>(b.size());
    csv.row({std::get<0>(k), std::get<1>(k), std::get<2>(k), std::to_string(iv.n), num(iv.mean), num(iv.low),
             num(iv.high), num(mean_bic)});
    auto& g = charts[std::get<0>(k)][std::get<1>(k)];
    g.label = std::get<1>(k);
    g.bars.push_back({std::get<2>(k), iv});
  }
  rep.write("nll.csv", csv);
  for (const auto& [phase, groups] : charts) {
    std::vector<BarGroup> gs;
    for (const auto& [n, g] : groups) gs.push_back(g);
    rep.write("nll_" + phase + ".svg", svg_bar_chart("Mean NLL per participant (" + phase + ")", "NLL", gs));
  }
}

}  // namespace

void cmd_report(const RunConfig& config, std::ostream& out) {
  const Artifacts artifacts(resolve_output_dir(config));
  const fs::path agents = artifacts.simulate() / "agents.csv";
  std::vector<fs::path> grids;
  if (fs::exists(artifacts.simulate())) {
    for (const auto& e : fs::directory_iterator(artifacts.simulate())) {
      const std::string n = e.path().filename().string();
      if (n.starts_with("grid-") && n.ends_with(".csv")) grids.push_back(e.path());
    }
  }
  std::sort(grids.begin(), grids.end());
  if (!fs::exists(agents) && grids.empty()) require_artifact(agents, "simulate");
  fs::create_directories(artifacts.report());
  Reporter rep(config, artifacts.report());
  if (fs::exists(agents)) {
    agent_tables(rep, read_csv(agents.string()));
    const fs::path trials = artifacts.simulate() / "trials.csv";
    if (fs::exists(trials)) strategy_tables(rep, read_csv(trials.string()));
  }
  for (const auto& g : grids) grid_tables(rep, g);
  const fs::path scores = artifacts.evaluate() / "scores.csv";
  if (fs::exists(scores)) {
    nll_tables(rep, read_csv(scores.string()));
  } else {
    out << "report: no evaluate outputs; run `coxam evaluate` for NLL tables\n";
  }
  for (const auto& n : rep.written()) out << "report: " << (artifacts.report() / n).string() << '\n';
}

}  // namespace coxam::cli
