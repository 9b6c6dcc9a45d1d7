#include "coxam_cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "coxam/baselines.hpp"
#include "coxam/http_api.hpp"
#include "coxam/service.hpp"
#include "coxam/session_store.hpp"
#include "coxam_cli/csv.hpp"

namespace coxam::cli {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kParse:
    case ErrorCode::kValidation: return 3;
    case ErrorCode::kNotFound: return 4;
    case ErrorCode::kDatasetTooSmall:
    case ErrorCode::kInfeasible:
    case ErrorCode::kPrecondition: return 5;
    case ErrorCode::kIo: return 6;
    case ErrorCode::kInvariant:
    case ErrorCode::kStructure:
    case ErrorCode::kState:
    case ErrorCode::kConflict: return 7;
    case ErrorCode::kUnavailable: return 8;
  }
  return 1;
}

void require_artifact(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kNotFound, "missing " + path.string() + "; run `coxam " + producer + "` first");
  }
}

namespace {

constexpr std::uint64_t kSplitStream = 7;
constexpr std::uint64_t kAiStream = 11;

const ScenarioConfig& scenario_named(const RunConfig& config, const std::string& name) {
  for (const auto& s : config.scenarios) {
    if (s.name == name) return s;
  }
  throw Error(ErrorCode::kNotFound, "scenario '" + name + "' is not in the run config");
}

Dataset load_dataset(const RunConfig& config, const Artifacts& artifacts, const std::string& scenario,
                     const std::vector<std::string>& names) {
  const fs::path path = artifacts.dataset(scenario);
  require_artifact(path, "ingest");
  TargetRule rule;
  rule.column = "target";
  rule.threshold = 0.0;
  return ingest_csv(path.string(), names, rule, derive_seed(config.seed, kSplitStream));
}

std::vector<std::string> csv_attribute_names(const fs::path& path) {
  const CsvTable table = read_csv(path.string());
  std::vector<std::string> names;
  for (const auto& h : table.header) {
    if (h != "target") names.push_back(h);
  }
  return names;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers; the lowest-index failure is rethrown.
template <typename F>
void parallel_for(std::size_t n, int threads, F&& fn) {
  const auto workers = static_cast<std::size_t>(std::clamp(threads, 1, 256));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

class TaskCache {
 public:
  TaskCache(const RunConfig& config, const Artifacts& artifacts) : config_(config), artifacts_(artifacts) {}
  std::shared_ptr<const Task> get(const std::string& scenario, Complexity c) {
    std::lock_guard lock(mutex_);
    auto& slot = tasks_[{scenario, c}];
    if (!slot) slot = load_task(config_, artifacts_, scenario, c);
    return slot;
  }

 private:
  const RunConfig& config_;
  const Artifacts& artifacts_;
  std::mutex mutex_;
  std::map<std::pair<std::string, Complexity>, std::shared_ptr<const Task>> tasks_;
};

std::string cell_name(const std::string& scenario, Complexity c, XaiCondition cond) {
  return scenario + "-" + std::string(complexity_name(c)) + "-" + std::string(xai_condition_name(cond));
}

std::string agent_id(int a) {
  std::ostringstream s;
  s << "agent-" << std::setw(3) << std::setfill('0') << a;
  return s.str();
}

struct AgentMetrics {
  SessionScore score;
  double mean_subset = std::nan("");
  double mean_forward_time = 0.0;
};

AgentMetrics metrics_of(const Task& task, const Session& s) {
  AgentMetrics m;
  m.score = score_records(task.models.ai, s.records());
  double subset = 0.0, time = 0.0;
  int n_subset = 0, n_fwd = 0;
  for (const auto& r : s.records()) {
    if (r.phase != Phase::kForward || !r.simulation) continue;
    ++n_fwd;
    time += r.simulated_time_s.value_or(0.0);
    if (r.simulation->strategy == Strategy::kApproximateCalculation) {
      subset += r.simulation->subset_size;
      ++n_subset;
    }
  }
  if (n_subset > 0) m.mean_subset = subset / n_subset;
  if (n_fwd > 0) m.mean_forward_time = time / n_fwd;
  return m;
}

struct Cell {
  std::string scenario;
  Complexity complexity;
  XaiCondition condition;
};

std::vector<Cell> grid_cells(const RunConfig& config) {
  std::vector<Cell> cells;
  for (const auto& s : config.scenarios) {
    for (auto c : config.complexities) {
      for (auto cond : config.conditions) cells.push_back({s.name, c, cond});
    }
  }
  return cells;
}

SessionConfig session_for(const RunConfig& config, const Cell& cell, int agent, std::uint64_t seed) {
  SessionConfig sc = config.session;
  sc.scenario = cell.scenario;
  sc.complexity = cell.complexity;
  sc.condition = cell.condition;
  sc.seed = seed;
  sc.participant_id = agent_id(agent);
  return sc;
}

std::vector<fs::path> find_logs(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl" && e.path().filename() != "index.jsonl") {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Json params_json(FitTarget target, const CognitiveParams& p) {
  Json j{{"kappa", p.kappa}, {"gamma", p.gamma}};
  if (target == FitTarget::kForward) {
    j["nu"] = p.nu;
  } else {
    j["epsilon"] = p.epsilon;
  }
  return j;
}

}  // namespace

std::shared_ptr<const Task> load_task(const RunConfig& config, const Artifacts& artifacts, const std::string& scenario,
                                      Complexity complexity) {
  scenario_named(config, scenario);
  const fs::path path = artifacts.task(scenario, complexity);
  require_artifact(path, "surrogates");
  Task task = task_from_json(read_json_file(path.string()));
  std::vector<std::string> names;
  for (const auto& a : task.models.attributes) names.push_back(a.name);
  task.dataset.emplace(load_dataset(config, artifacts, scenario, names));
  return std::make_shared<const Task>(std::move(task));
}

std::unique_ptr<Controller> make_controller(const RunConfig& config, const Artifacts& artifacts) {
  if (config.controller.kind == "myopic") return std::make_unique<MyopicController>();
  const fs::path path = config.controller.policy ? fs::path(*config.controller.policy) : artifacts.policy();
  require_artifact(path, "train --policy");
  auto policy = std::make_shared<const PpoPolicy>(load_policy(path.string()));
  return std::make_unique<PolicyController>(std::move(policy), config.controller.deterministic);
}

void cmd_ingest(const RunConfig& config, std::ostream& out) {
  const Artifacts artifacts(resolve_output_dir(config));
  fs::create_directories(artifacts.root() / "datasets");
  for (std::size_t i = 0; i < config.scenarios.size(); ++i) {
    const ScenarioConfig& s = config.scenarios[i];
    const std::uint64_t split = derive_seed(config.seed, kSplitStream);
    if (s.synthetic) {
      const Dataset d = make_synthetic_dataset(*parse_synthetic_kind(*s.synthetic), s.n_rows, derive_seed(config.seed, 100 + i));
      write_csv(d, artifacts.dataset(s.name).string());
      out << "ingest " << s.name << ": " << d.size() << " synthetic rows (" << *s.synthetic << ")\n";
      continue;
    }
    const CsvTable table = read_csv(*s.csv, s.delimiter);
    const std::vector<std::string> names =
        s.attributes.empty() ? select_attributes_by_mutual_information(table, s.target) : s.attributes;
    IngestReport report;
    const Dataset d = ingest_table(table, names, s.target, split, &report);
    write_csv(d, artifacts.dataset(s.name).string());
    out << "ingest " << s.name << ": " << report.rows_read << " rows read, " << report.rows_dropped
        << " dropped, attributes";
    for (const auto& n : names) out << ' ' << n;
    out << '\n';
  }
}

void cmd_train(const RunConfig& config, bool policy, std::ostream& out) {
  const Artifacts artifacts(resolve_output_dir(config));
  for (std::size_t i = 0; i < config.scenarios.size(); ++i) {
    const ScenarioConfig& s = config.scenarios[i];
    const fs::path data = artifacts.dataset(s.name);
    require_artifact(data, "ingest");
    const Dataset d = load_dataset(config, artifacts, s.name, csv_attribute_names(data));
    TrainConfig ai = config.ai;
    ai.seed = derive_seed(config.seed, kAiStream + i);
    const AiModel model = train_ai(d, ai);
    fs::create_directories(artifacts.ai(s.name).parent_path());
    Json j = to_json(model);
    j["attributes"] = to_json(d.attributes());
    write_json_file(artifacts.ai(s.name).string(), j);
    out << "train " << s.name << ": train accuracy " << model.train_accuracy << ", test accuracy "
        << model.test_accuracy << (model.non_converged ? " (warning: not above the majority rate)" : "") << '\n';
  }
  if (!policy) return;
  const auto tasks = pretraining_tasks(config.seed);
  out << "train policy: " << tasks.size() << " pre-training tasks, " << config.ppo.total_timesteps << " steps\n";
  fs::create_directories(artifacts.policy().parent_path());
  const TrainReport report = ppo_train(tasks, config.ppo, artifacts.policy().string());
  save_policy(report.policy, artifacts.policy().string());
  out << "train policy: " << report.updates << " updates, " << report.timesteps << " steps";
  if (!report.mean_episode_reward.empty()) {
    out << ", mean episode reward " << report.mean_episode_reward.front() << " -> " << report.mean_episode_reward.back();
  }
  out << '\n';
  if (report.diverged) throw Error(ErrorCode::kInvariant, report.message);
}

void cmd_surrogates(const RunConfig& config, std::ostream& out) {
  const Artifacts artifacts(resolve_output_dir(config));
  for (const ScenarioConfig& s : config.scenarios) {
    require_artifact(artifacts.ai(s.name), "train");
    const Json aj = read_json_file(artifacts.ai(s.name).string());
    const AttributeSpecs specs = attribute_specs_from_json(aj.at("attributes"));
    Json model_json = aj;
    model_json.erase("attributes");
    const AiModel ai = ai_model_from_json(model_json);
    std::vector<std::string> names;
    for (const auto& a : specs) names.push_back(a.name);
    const Dataset d = load_dataset(config, artifacts, s.name, names);
    for (const Complexity c : config.complexities) {
      const WeightModel w = fit_linear_surrogate(ai, d, nonzero_factors_for(c));
      const RuleTree tree = fit_tree_surrogate(ai, d, tree_depth_for(c));
      const Task task = assemble_task(s.name, c, specs, ai, w, tree);
      write_json_file(artifacts.task(s.name, c).string(), task_to_json(task));
      const auto rows = d.test_rows();
      out << "surrogates " << s.name << " " << complexity_name(c) << ": linear fidelity "
          << fidelity(task.weights_classifier(), task.ai_classifier(), rows) << ", tree fidelity "
          << fidelity(task.tree_classifier(), task.ai_classifier(), rows) << (w.clamped ? " (linear factors clamped)" : "")
          << '\n';
    }
  }
}

void cmd_simulate(const RunConfig& config, const SimulateOptions& options, std::ostream& out) {
  const Artifacts artifacts(resolve_output_dir(config));
  TaskCache tasks(config, artifacts);
  const auto cells = grid_cells(config);
  fs::create_directories(artifacts.simulate());
  const auto per_thread_controller = [&] { return make_controller(config, artifacts); };
  per_thread_controller();  // fail fast on a missing policy

  if (options.grid) {
    const GridSpec& g = *options.grid;
    struct Job {
      std::size_t value;
      std::size_t cell;
      int agent;
    };
    std::vector<Job> jobs;
    for (std::size_t v = 0; v < g.values.size(); ++v) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        for (int a = 0; a < config.agents_per_cell; ++a) jobs.push_back({v, c, a});
      }
    }
    std::vector<AgentMetrics> results(jobs.size());
    for (const auto& cell : cells) tasks.get(cell.scenario, cell.complexity);
    parallel_for(jobs.size(), options.parallel, [&](std::size_t i) {
      const Job& job = jobs[i];
      CognitiveParams p = config.params;
      set_parameter(p, g.parameter, g.values[job.value]);
      p.validate();
      const Cell& cell = cells[job.cell];
      const auto task = tasks.get(cell.scenario, cell.complexity);
      const std::uint64_t seed = derive_seed(config.seed, (job.cell * 1000 + static_cast<std::size_t>(job.agent)) * 1000 + job.value);
      auto controller = per_thread_controller();
      const Session s = simulate_session(agent_id(job.agent), session_for(config, cell, job.agent, seed), task, p,
                                         *controller, derive_seed(seed, 1));
      results[i] = metrics_of(*task, s);
    });
    CsvWriter csv({"parameter", "value", "scenario", "complexity", "condition", "agent", "forward_accuracy",
                   "forward_with_xai", "forward_without_xai", "counterfactual_accuracy", "mean_subset_size",
                   "mean_forward_time_s"});
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      const Cell& cell = cells[jobs[i].cell];
      const auto& m = results[i];
      csv.row({g.parameter, num(g.values[jobs[i].value]), cell.scenario, std::string(complexity_name(cell.complexity)),
               std::string(xai_condition_name(cell.condition)), agent_id(jobs[i].agent), num(m.score.forward_accuracy),
               num(m.score.forward_with_xai), num(m.score.forward_without_xai), num(m.score.counterfactual_accuracy),
               num(m.mean_subset), num(m.mean_forward_time)});
    }
    const fs::path path = artifacts.simulate() / ("grid-" + g.parameter + ".csv");
    csv.save(path);
    out << "simulate grid " << g.parameter << ": " << jobs.size() << " sessions -> " << path.string() << '\n';
    return;
  }

  fs::remove_all(artifacts.logs());
  CsvWriter agents({"scenario", "complexity", "condition", "agent", "seed", "controller", "kappa", "gamma", "nu",
                    "epsilon", "forward_accuracy", "forward_with_xai", "forward_without_xai", "counterfactual_accuracy",
                    "mean_subset_size", "mean_forward_time_s"});
  CsvWriter trials({"scenario", "complexity", "condition", "agent", "trial_index", "phase", "xai_visible",
                    "schema_shown", "strategy", "effort", "subset_size", "depth", "correct", "time_s"});
  const std::string controller_name(per_thread_controller()->name());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const Cell& cell = cells[c];
    const auto task = tasks.get(cell.scenario, cell.complexity);
    std::vector<std::optional<Session>> sessions(static_cast<std::size_t>(config.agents_per_cell));
    std::vector<std::uint64_t> seeds(sessions.size());
    for (std::size_t a = 0; a < seeds.size(); ++a) seeds[a] = derive_seed(config.seed, c * 1000 + a);
    parallel_for(sessions.size(), options.parallel, [&](std::size_t a) {
      auto controller = per_thread_controller();
      sessions[a].emplace(simulate_session(agent_id(static_cast<int>(a)),
                                           session_for(config, cell, static_cast<int>(a), seeds[a]), task, config.params,
                                           *controller, derive_seed(seeds[a], 1)));
    });
    const std::string name = cell_name(cell.scenario, cell.complexity, cell.condition);
    fs::create_directories(artifacts.logs() / name);
    FileSessionStore store((artifacts.logs() / name).string());
    for (std::size_t a = 0; a < sessions.size(); ++a) {
      const Session& s = *sessions[a];
      store.create(s.id(), s.config());
      for (const auto& r : s.records()) store.append(s.id(), r);
      const AgentMetrics m = metrics_of(*task, s);
      const auto& p = config.params;
      agents.row({cell.scenario, std::string(complexity_name(cell.complexity)), std::string(xai_condition_name(cell.condition)),
                  s.id(), std::to_string(seeds[a]), controller_name, num(p.kappa), num(p.gamma), num(p.nu), num(p.epsilon),
                  num(m.score.forward_accuracy), num(m.score.forward_with_xai), num(m.score.forward_without_xai),
                  num(m.score.counterfactual_accuracy), num(m.mean_subset), num(m.mean_forward_time)});
      for (const auto& r : s.records()) {
        bool correct = false;
        if (r.phase == Phase::kForward) {
          correct = r.response_label && *r.response_label == r.ai_label;
        } else if (r.edit) {
          correct = task->models.ai.predict(r.edit->apply(r.instance)) != r.ai_label;
        }
        const auto& d = *r.simulation;
        trials.row({cell.scenario, std::string(complexity_name(cell.complexity)),
                    std::string(xai_condition_name(cell.condition)), s.id(), std::to_string(r.trial_index),
                    std::string(phase_name(r.phase)), r.xai_visible ? "1" : "0", std::string(schema_kind_name(r.shown)),
                    std::string(strategy_name(d.strategy)), num(d.effort), std::to_string(d.subset_size),
                    std::to_string(d.depth), correct ? "1" : "0", num(r.simulated_time_s.value_or(0.0))});
      }
    }
    out << "simulate " << name << ": " << sessions.size() << " agents\n";
  }
  agents.save(artifacts.simulate() / "agents.csv");
  trials.save(artifacts.simulate() / "trials.csv");
  out << "simulate: logs under " << artifacts.logs().string() << '\n';
}

void cmd_fit(const RunConfig& config, const FitOptions& options, std::ostream& out) {
  const Artifacts artifacts(resolve_output_dir(config));
  const fs::path root = options.logs ? *options.logs : artifacts.logs();
  require_artifact(root, "simulate");
  auto files = find_logs(root);
  if (options.limit > 0 && files.size() > static_cast<std::size_t>(options.limit)) {
    files.resize(static_cast<std::size_t>(options.limit));
  }
  if (files.empty()) throw Error(ErrorCode::kNotFound, "no session logs under " + root.string());
  TaskCache tasks(config, artifacts);
  std::vector<Json> fits(files.size());
  parallel_for(files.size(), options.parallel, [&](std::size_t i) {
    const StoredSession stored = parse_session_jsonl(read_text(files[i]));
    const auto task = tasks.get(stored.config.scenario, stored.config.complexity);
    const std::string participant = fs::relative(files[i], root).replace_extension().generic_string();
    Json j{{"participant", participant},
           {"log", fs::relative(files[i], root).generic_string()},
           {"scenario", stored.config.scenario},
           {"complexity", complexity_name(stored.config.complexity)},
           {"condition", xai_condition_name(stored.config.condition)}};
    OptimizerConfig opt = config.fit.optimizer;
    opt.seed = derive_seed(config.seed, i);
    const bool has_forward = std::any_of(stored.records.begin(), stored.records.end(),
                                         [](const TrialRecord& r) { return r.phase == Phase::kForward; });
    const bool has_cf = std::any_of(stored.records.begin(), stored.records.end(),
                                    [](const TrialRecord& r) { return r.phase == Phase::kCounterfactual; });
    if (has_forward) {
      const ParticipantFit f = fit_participant(task->models, stored.config.condition, stored.records,
                                               FitTarget::kForward, opt, config.fit.replays, config.fit.forward_bounds,
                                               config.params);
      j["forward"] = {{"params", params_json(FitTarget::kForward, f.params)},
                      {"nll", f.score.nll},
                      {"k", f.score.k},
                      {"n", f.score.n},
                      {"bic", f.score.bic},
                      {"evaluations", f.result.evaluations},
                      {"budget_exhausted", f.result.budget_exhausted}};
    }
    if (has_cf) {
      const ParticipantFit f = fit_participant(task->models, stored.config.condition, stored.records,
                                               FitTarget::kCounterfactual, opt, config.fit.replays,
                                               config.fit.counterfactual_bounds, config.params);
      const ParticipantObjective objective(task->models, stored.config.condition, stored.records,
                                           FitTarget::kCounterfactual, config.fit.replays, opt.seed, config.params);
      const ReplayPrediction m = objective.mean_prediction(f.params);
      std::vector<std::size_t> chosen;
      std::vector<double> predicted, observed;
      std::size_t k = 0;
      for (const auto& r : stored.records) {
        if (r.phase != Phase::kCounterfactual) continue;
        chosen.push_back(r.edit->attribute);
        predicted.push_back(m.mean_delta[k][r.edit->attribute]);
        observed.push_back(r.edit->delta / task->models.attributes[r.edit->attribute].range());
        ++k;
      }
      const double sel = nll_cf_selection(m.selection, chosen, config.params.lapse);
      const ModelScore score = make_score("CoXAM", sel, kCoxamParams, static_cast<int>(chosen.size()));
      j["counterfactual"] = {{"params", params_json(FitTarget::kCounterfactual, f.params)},
                             {"objective", f.result.best_objective},
                             {"nll", score.nll},
                             {"mae", mae(predicted, observed)},
                             {"k", score.k},
                             {"n", score.n},
                             {"bic", score.bic},
                             {"evaluations", f.result.evaluations},
                             {"budget_exhausted", f.result.budget_exhausted}};
    }
    fits[i] = std::move(j);
  });
  fs::create_directories(artifacts.fit());
  write_json_file((artifacts.fit() / "fits.json").string(),
                  Json{{"schema_version", kSchemaVersion}, {"logs", fs::absolute(root).lexically_normal().string()},
                       {"fits", fits}});
  CsvWriter csv({"participant", "scenario", "complexity", "condition", "target", "kappa", "gamma", "nu", "epsilon",
                 "nll", "mae", "n", "bic", "evaluations", "budget_exhausted"});
  for (const auto& j : fits) {
    for (const char* target : {"forward", "counterfactual"}) {
      if (!j.contains(target)) continue;
      const Json& f = j[target];
      const Json& p = f["params"];
      csv.row({j["participant"].get<std::string>(), j["scenario"].get<std::string>(), j["complexity"].get<std::string>(),
               j["condition"].get<std::string>(), target, num(p["kappa"].get<double>()),
               num(p["gamma"].get<double>()), p.contains("nu") ? num(p["nu"].get<double>()) : "",
               p.contains("epsilon") ? num(p["epsilon"].get<double>()) : "", num(f["nll"].get<double>()),
               f.contains("mae") ? num(f["mae"].get<double>()) : "", std::to_string(f["n"].get<int>()),
               num(f["bic"].get<double>()), std::to_string(f["evaluations"].get<int>()),
               f["budget_exhausted"].get<bool>() ? "1" : "0"});
    }
  }
  csv.save(artifacts.fit() / "fits.csv");
  out << "fit: " << fits.size() << " participants -> " << (artifacts.fit() / "fits.csv").string() << '\n';
}

void cmd_evaluate(const RunConfig& config, const EvaluateOptions& options, std::ostream& out) {
  const Artifacts artifacts(resolve_output_dir(config));
  const fs::path fits_path = artifacts.fit() / "fits.json";
  require_artifact(fits_path, "fit");
  const Json doc = read_json_file(fits_path.string());
  const fs::path root = options.logs ? *options.logs : fs::path(doc.at("logs").get<std::string>());
  require_artifact(root, "simulate");
  TaskCache tasks(config, artifacts);
  std::map<std::pair<std::string, Complexity>, GlobalShap> shap;

  CsvWriter scores({"participant", "scenario", "complexity", "condition", "phase", "model", "nll", "k", "n", "bic"});
  // Means are per participant; pooled figures treat the cell as one dataset with k parameters
  // per participant.
  struct Agg {
    double nll = 0.0, bic = 0.0;
    int n = 0, wins = 0, params = 0, trials = 0;
  };
  std::map<std::tuple<std::string, std::string, std::string, std::string>, Agg> tables;  // phase, scenario, condition, model
  for (const Json& fit : doc.at("fits")) {
    const StoredSession stored = parse_session_jsonl(read_text(root / fit.at("log").get<std::string>()));
    const auto task = tasks.get(stored.config.scenario, stored.config.complexity);
    const std::string scenario = stored.config.scenario;
    const std::string condition(xai_condition_name(stored.config.condition));
    const auto emit = [&](const char* phase, const std::vector<ModelScore>& models) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& m : models) best = std::min(best, m.nll);
      for (const auto& m : models) {
        scores.row({fit["participant"].get<std::string>(), scenario, std::string(complexity_name(stored.config.complexity)), condition,
                    phase, m.model, num(m.nll), std::to_string(m.k), std::to_string(m.n), num(m.bic)});
        auto& agg = tables[{phase, scenario, condition, m.model}];
        agg.nll += m.nll;
        agg.bic += m.bic;
        agg.n += 1;
        agg.params += m.k;
        agg.trials += m.n;
        agg.wins += m.nll == best ? 1 : 0;
      }
    };
    if (fit.contains("forward")) {
      std::vector<ModelScore> models;
      const Json& f = fit["forward"];
      models.push_back(make_score("CoXAM", f["nll"].get<double>(), kCoxamParams, f["n"].get<int>()));
      for (const auto& b : forward_baselines(task->models, stored.records)) models.push_back(b.score);
      emit("forward", models);
    }
    if (fit.contains("counterfactual")) {
      auto key = std::make_pair(scenario, stored.config.complexity);
      if (!shap.count(key)) {
        const auto test = task->dataset->test_rows();
        const auto train = task->dataset->train_rows();
        std::vector<Instance> instances, background;
        for (std::size_t i = 0; i < test.size(); i += std::max<std::size_t>(1, test.size() / 100)) instances.push_back(test[i]);
        for (std::size_t i = 0; i < train.size(); i += std::max<std::size_t>(1, train.size() / 50)) background.push_back(train[i]);
        Rng rng(derive_seed(config.seed, 31));
        const AiModel& ai = task->models.ai;
        shap[key] = global_shap([&ai](const Instance& x) { return ai.probability(x); }, instances, background,
                                config.fit.shap_samples, rng);
        if (shap[key].unstable) out << "evaluate: warning: global SHAP for " << scenario << ": " << shap[key].warning << '\n';
      }
      const Json& f = fit["counterfactual"];
      emit("counterfactual", {make_score("CoXAM", f["nll"].get<double>(), kCoxamParams, f["n"].get<int>()),
                              score_shap_selection(shap[key].selection, stored.records),
                              score_random_selection(stored.records)});
    }
  }
  fs::create_directories(artifacts.evaluate());
  scores.save(artifacts.evaluate() / "scores.csv");
  for (const char* phase : {"forward", "counterfactual"}) {
    CsvWriter table({"scenario", "condition", "model", "participants", "mean_nll", "mean_bic", "best_nll_share",
                      "pooled_nll", "pooled_bic"});
    for (const auto& [key, agg] : tables) {
      if (std::get<0>(key) != phase) continue;
      table.row({std::get<1>(key), std::get<2>(key), std::get<3>(key), std::to_string(agg.n), num(agg.nll / agg.n),
                 num(agg.bic / agg.n), num(static_cast<double>(agg.wins) / agg.n), num(agg.nll),
                 num(bic(agg.nll, agg.params, agg.trials))});
      out << phase << ' ' << std::get<1>(key) << ' ' << std::get<2>(key) << ' ' << std::get<3>(key) << ": NLL "
          << std::fixed << std::setprecision(2) << agg.nll / agg.n << " BIC " << agg.bic / agg.n << std::defaultfloat
          << std::setprecision(6) << '\n';
    }
    table.save(artifacts.evaluate() / (std::string(phase) + "_table.csv"));
  }
}

void cmd_serve(const RunConfig& config, std::ostream& out) {
  const Artifacts artifacts(resolve_output_dir(config));
  fs::create_directories(artifacts.sessions());
  auto store = std::make_shared<FileSessionStore>(artifacts.sessions().string());
  auto cache = std::make_shared<TaskCache>(config, artifacts);
  TaskProvider provider = [cache, &config](const std::string& scenario, Complexity c) -> std::shared_ptr<const Task> {
    if (std::none_of(config.scenarios.begin(), config.scenarios.end(),
                     [&](const ScenarioConfig& s) { return s.name == scenario; })) {
      return nullptr;
    }
    return cache->get(scenario, c);
  };
  SessionService service(store, provider);
  HttpServer server(service);
  out << "serving on http://" << config.host << ':' << config.port << " (sessions in " << artifacts.sessions().string()
      << ")\n"
      << std::flush;
  server.run(config.host, config.port);
}

}  // namespace coxam::cli
