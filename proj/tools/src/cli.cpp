#include "coxam_cli/cli.hpp"

#include <CLI11.hpp>

#include <ostream>

#include "coxam_cli/commands.hpp"

namespace coxam::cli {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"coxam: simulate, fit and evaluate how people interpret AI explanations"};
  app.set_version_flag("--version", "coxam 0.1.0");
  std::string config_path;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("-c,--config", config_path, "Run config JSON (defaults apply when omitted)");
  app.add_option("-o,--output", output_dir, "Output directory, overriding the config");
  app.add_option("--seed", seed, "Master seed, overriding the config");
  app.require_subcommand(1);

  auto* config_cmd = app.add_subcommand("config", "Print the effective run config as JSON");
  auto* ingest = app.add_subcommand("ingest", "Ingest CSV or synthetic datasets into datasets/");
  auto* train = app.add_subcommand("train", "Train the AI model per scenario");
  bool train_policy = false;
  train->add_flag("--policy", train_policy, "Also pre-train the PPO controller");
  auto* surrogates = app.add_subcommand("surrogates", "Fit linear and tree surrogates per complexity");
  auto* simulate = app.add_subcommand("simulate", "Run simulated agents through every cell");
  std::string grid_text;
  SimulateOptions sim;
  simulate->add_option("--grid", grid_text, "Parameter sweep name=start:stop:count");
  simulate->add_option("-j,--parallel", sim.parallel, "Worker threads")->check(CLI::Range(1, 256));
  auto* fit = app.add_subcommand("fit", "Fit cognitive parameters to session logs");
  FitOptions fit_opts;
  std::string fit_logs;
  fit->add_option("--logs", fit_logs, "Directory of session logs (searched recursively)");
  fit->add_option("-j,--parallel", fit_opts.parallel, "Worker threads")->check(CLI::Range(1, 256));
  fit->add_option("--limit", fit_opts.limit, "Fit at most this many logs")->check(CLI::NonNegativeNumber);
  auto* evaluate = app.add_subcommand("evaluate", "Score fitted models against baselines");
  std::string eval_logs;
  evaluate->add_option("--logs", eval_logs, "Directory of session logs used by fit");
  auto* serve = app.add_subcommand("serve", "Serve the trial-harness HTTP API");
  std::optional<std::string> host;
  std::optional<int> port;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
  auto* report = app.add_subcommand("report", "Aggregate outputs into CSV tables and SVG charts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig config = config_path.empty() ? default_run_config() : load_run_config(config_path);
    if (output_dir) config.output_dir = *output_dir;
    if (seed) {
      config.seed = *seed;
      config.fit.optimizer.seed = *seed;
      config.ppo.seed = *seed;
    }
    if (host) config.host = *host;
    if (port) config.port = *port;

    if (*config_cmd) {
      out << to_json(config).dump(2) << '\n';
    } else if (*ingest) {
      cmd_ingest(config, out);
    } else if (*train) {
      cmd_train(config, train_policy, out);
    } else if (*surrogates) {
      cmd_surrogates(config, out);
    } else if (*simulate) {
      if (!grid_text.empty()) sim.grid = parse_grid(grid_text);
      cmd_simulate(config, sim, out);
    } else if (*fit) {
      if (!fit_logs.empty()) fit_opts.logs = fit_logs;
      cmd_fit(config, fit_opts, out);
    } else if (*evaluate) {
      EvaluateOptions opts;
      if (!eval_logs.empty()) opts.logs = eval_logs;
      cmd_evaluate(config, opts, out);
    } else if (*serve) {
      cmd_serve(config, out);
    } else if (*report) {
      cmd_report(config, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(ErrorCode::kIo);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace coxam::cli
