#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include "coxam_cli/run_config.hpp"

namespace coxam::cli {

/// Process exit code for each error class; 2 is reserved for command-line usage errors.
int exit_code_for(ErrorCode code);

/// Where every command reads and writes under the output directory.
class Artifacts {
 public:
  explicit Artifacts(std::filesystem::path root) : root_(std::move(root)) {}
  const std::filesystem::path& root() const { return root_; }

  std::filesystem::path dataset(const std::string& scenario) const { return root_ / "datasets" / (scenario + ".csv"); }
  std::filesystem::path ai(const std::string& scenario) const { return root_ / "models" / scenario / "ai.json"; }
  std::filesystem::path task(const std::string& scenario, Complexity c) const {
    return root_ / "models" / scenario / ("task-" + std::string(complexity_name(c)) + ".json");
  }
  std::filesystem::path policy() const { return root_ / "models" / "policy.json"; }
  std::filesystem::path simulate() const { return root_ / "simulate"; }
  std::filesystem::path logs() const { return root_ / "simulate" / "logs"; }
  std::filesystem::path fit() const { return root_ / "fit"; }
  std::filesystem::path evaluate() const { return root_ / "evaluate"; }
  std::filesystem::path report() const { return root_ / "report"; }
  std::filesystem::path sessions() const { return root_ / "sessions"; }

 private:
  std::filesystem::path root_;
};

/// Fails with kNotFound naming the command that produces `path` when it is missing.
void require_artifact(const std::filesystem::path& path, const std::string& producer);

/// Stored task models with their ingested dataset re-attached.
std::shared_ptr<const Task> load_task(const RunConfig& config, const Artifacts& artifacts, const std::string& scenario,
                                      Complexity complexity);

/// The configured controller; a PPO controller needs a trained policy checkpoint.
std::unique_ptr<Controller> make_controller(const RunConfig& config, const Artifacts& artifacts);

void cmd_ingest(const RunConfig& config, std::ostream& out);
/// Trains the AI per scenario; with `policy`, also pre-trains the PPO controller.
void cmd_train(const RunConfig& config, bool policy, std::ostream& out);
void cmd_surrogates(const RunConfig& config, std::ostream& out);

struct SimulateOptions {
  std::optional<GridSpec> grid;
  int parallel = 1;
};
/// Agents per cell over scenario x complexity x schema; each session covers both visibility levels,
/// so the report splits every cell into its with- and without-XAI halves.
void cmd_simulate(const RunConfig& config, const SimulateOptions& options, std::ostream& out);

struct FitOptions {
  /// Directory searched recursively for session logs; defaults to the simulate logs.
  std::optional<std::filesystem::path> logs;
  int parallel = 1;
  /// Fit at most this many logs (0 = all), in sorted path order.
  int limit = 0;
};
void cmd_fit(const RunConfig& config, const FitOptions& options, std::ostream& out);

struct EvaluateOptions {
  std::optional<std::filesystem::path> logs;
};
void cmd_evaluate(const RunConfig& config, const EvaluateOptions& options, std::ostream& out);

/// Blocks serving the trial-harness API until the process is stopped.
void cmd_serve(const RunConfig& config, std::ostream& out);

/// Aggregates simulate and evaluate outputs into CSV tables and SVG charts.
void cmd_report(const RunConfig& config, std::ostream& out);

}  // namespace coxam::cli
