#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "coxam_cli/cli.hpp"
#include "coxam_cli/commands.hpp"
#include "coxam_cli/csv.hpp"
#include "coxam_cli/report.hpp"
#include "coxam_cli/run_config.hpp"
#include "test_support.hpp"

namespace coxam::cli {
namespace {

namespace fs = std::filesystem;
using coxam::testing::TempDir;

struct RunResult {
  int code = 0;
  std::string out;
  std::string err;
};

RunResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "coxam");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

/// Smallest config that still runs every command end to end.
fs::path tiny_config(const fs::path& dir) {
  Json j = to_json(default_run_config());
  j["output_dir"] = (dir / "out").string();
  j["agents_per_cell"] = 2;
  j["conditions"] = Json::array({"rules"});
  j["scenarios"] = Json::array({Json{{"name", "wine"}, {"synthetic", "wine-like"}, {"n_rows", 600}}});
  j["ai"]["epochs"] = 30;
  j["fit"]["budget"] = 6;
  j["fit"]["initial"] = 4;
  j["fit"]["candidates"] = 100;
  j["fit"]["replays"] = 1;
  j["fit"]["max_knn"] = 3;
  j["fit"]["shap_samples"] = 20;
  j["bootstrap"] = 100;
  const fs::path path = dir / "config.json";
  std::ofstream(path) << j.dump(2);
  return path;
}

TEST(RunConfig, DefaultsRoundTrip) {
  const RunConfig c = default_run_config();
  EXPECT_EQ(c.scenarios.size(), 2u);
  EXPECT_EQ(c.conditions.size(), 3u);
  EXPECT_EQ(c.agents_per_cell, 50);
  const Json j = to_json(c);
  EXPECT_EQ(to_json(run_config_from_json(j)), j);
}

TEST(RunConfig, UnknownKeysNameTheirPath) {
  Json j = to_json(default_run_config());
  j["fit"]["turbo"] = true;
  try {
    run_config_from_json(j);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find("turbo"), std::string::npos);
  }
}

TEST(RunConfig, InvalidValuesAreConfigErrors) {
  Json j = to_json(default_run_config());
  j["agents_per_cell"] = 0;
  EXPECT_THROW(run_config_from_json(j), Error);
  Json k = to_json(default_run_config());
  k["conditions"] = Json::array({"telepathy"});
  EXPECT_THROW(run_config_from_json(k), Error);
}

TEST(Grid, CountPointsWithEndsIncluded) {
  const GridSpec g = parse_grid("gamma=0:0.1:5");
  EXPECT_EQ(g.parameter, "gamma");
  ASSERT_EQ(g.values.size(), 5u);
  EXPECT_DOUBLE_EQ(g.values.front(), 0.0);
  EXPECT_DOUBLE_EQ(g.values.back(), 0.1);
  EXPECT_NEAR(g.values[1], 0.025, 1e-15);
  EXPECT_EQ(parse_grid("nu=2:2:1").values, std::vector<double>{2.0});
}

TEST(Grid, MalformedSpecsAreRejected) {
  for (const char* bad : {"gamma", "gamma=1:2", "gamma=a:b:3", "gamma=0:1:0", "=0:1:3", "warp=0:1:3"}) {
    EXPECT_THROW(parse_grid(bad), Error) << bad;
  }
}

TEST(Grid, SetParameterByName) {
  CognitiveParams p;
  set_parameter(p, "kappa", -0.5);
  set_parameter(p, "epsilon", 0.2);
  EXPECT_EQ(p.kappa, -0.5);
  EXPECT_EQ(p.epsilon, 0.2);
  EXPECT_THROW(set_parameter(p, "charisma", 1.0), Error);
}

TEST(Csv, QuotesCellsThatNeedIt) {
  CsvWriter w({"a", "b"});
  w.row({"x,y", "say \"hi\""});
  EXPECT_EQ(w.str(), "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n");
  EXPECT_THROW(w.row({"only one"}), Error);
  EXPECT_EQ(num(std::nan("")), "");
}

TEST(Report, BootstrapIntervalsBracketTheMean) {
  const std::vector<double> v{0.2, 0.4, 0.6, 0.8, 1.0, 0.3, 0.7};
  const Interval i = bootstrap_mean(v, 2000, 3);
  EXPECT_NEAR(i.mean, 4.0 / 7.0, 1e-12);
  EXPECT_LE(i.low, i.mean);
  EXPECT_GE(i.high, i.mean);
  EXPECT_EQ(i.n, 7u);
  const Interval one = bootstrap_mean(std::vector<double>{0.5}, 100, 3);
  EXPECT_EQ(one.low, one.high);
  EXPECT_TRUE(std::isnan(bootstrap_mean({}, 100, 3).mean));
}

TEST(Report, ChartsAreWellFormedSvg) {
  const std::string bar = svg_bar_chart("t", "y", {BarGroup{"g", {Bar{"s", Interval{0.5, 0.4, 0.6, 3}}}}});
  EXPECT_EQ(bar.rfind("<svg", 0), 0u);
  EXPECT_NE(bar.find("</svg>"), std::string::npos);
  const std::string line = svg_line_chart("t", "x", "y", {LineSeries{"s", {{0.0, Interval{1.0, 0.9, 1.1, 4}}, {1.0, Interval{2.0, 1.8, 2.2, 4}}}}});
  EXPECT_NE(line.find("</svg>"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"--version"}).code, 0);
  EXPECT_EQ(run({"-c", "/nonexistent/config.json", "config"}).code, 3);
  TempDir dir;
  const fs::path bad = dir.path() / "bad.json";
  std::ofstream(bad) << R"({"seed": 1, "nope": 2})";
  EXPECT_EQ(run({"-c", bad.string(), "config"}).code, 3);
  const auto missing = run({"-o", (dir.path() / "empty").string(), "fit"});
  EXPECT_EQ(missing.code, 4);
  EXPECT_NE(missing.err.find("coxam simulate"), std::string::npos);
  EXPECT_EQ(run({"-o", (dir.path() / "empty").string(), "simulate", "--grid", "warp=0:1:2"}).code, 3);
}

TEST(Cli, ConfigPrintsTheEffectiveConfig) {
  const auto r = run({"--seed", "77", "config"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(Json::parse(r.out)["seed"], 77);
}

TEST(Cli, PipelineRunsEndToEndAndIsReproducible) {
  TempDir dir;
  const std::string cfg = tiny_config(dir.path()).string();
  const fs::path out = dir.path() / "out";
  for (const char* cmd : {"ingest", "train", "surrogates", "simulate"}) {
    const auto r = run({"-c", cfg, cmd});
    ASSERT_EQ(r.code, 0) << cmd << ": " << r.err;
  }
  ASSERT_TRUE(fs::exists(out / "simulate" / "agents.csv"));
  const std::string agents = read_file(out / "simulate" / "agents.csv");
  const std::string trials = read_file(out / "simulate" / "trials.csv");

  // A second simulation into a fresh directory reproduces the outputs byte for byte.
  TempDir again;
  const std::string cfg2 = tiny_config(again.path()).string();
  for (const char* cmd : {"ingest", "train", "surrogates", "simulate"}) ASSERT_EQ(run({"-c", cfg2, cmd}).code, 0);
  EXPECT_EQ(read_file(again.path() / "out" / "simulate" / "agents.csv"), agents);
  EXPECT_EQ(read_file(again.path() / "out" / "simulate" / "trials.csv"), trials);

  for (const char* cmd : {"fit", "evaluate", "report"}) {
    const auto r = run({"-c", cfg, cmd});
    ASSERT_EQ(r.code, 0) << cmd << ": " << r.err;
  }
  const Json fits = Json::parse(read_file(out / "fit" / "fits.json"));
  EXPECT_EQ(fits["fits"].size(), 2u);
  EXPECT_TRUE(fs::exists(out / "evaluate" / "forward_table.csv"));
  EXPECT_TRUE(fs::exists(out / "evaluate" / "counterfactual_table.csv"));
  const std::string table = read_file(out / "evaluate" / "forward_table.csv");
  EXPECT_NE(table.find("mean_nll"), std::string::npos);
  EXPECT_NE(table.find("pooled_bic"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "report" / "forward_accuracy.svg"));

  const auto grid = run({"-c", cfg, "simulate", "--grid", "gamma=0:0.1:2"});
  ASSERT_EQ(grid.code, 0) << grid.err;
  EXPECT_TRUE(fs::exists(out / "simulate" / "grid-gamma.csv"));
}

}  // namespace
}  // namespace coxam::cli
