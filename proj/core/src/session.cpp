#include "coxam/session.hpp"

#include <algorithm>
#include <cmath>

namespace coxam {

std::string_view visibility_schedule_name(VisibilitySchedule s) {
  switch (s) {
    case VisibilitySchedule::kPaired: return "paired";
    case VisibilitySchedule::kRandomized: return "randomized";
    case VisibilitySchedule::kAlways: return "always";
    case VisibilitySchedule::kNever: return "never";
  }
  return "paired";
}

VisibilitySchedule parse_visibility_schedule(std::string_view name) {
  if (name == "paired") return VisibilitySchedule::kPaired;
  if (name == "randomized") return VisibilitySchedule::kRandomized;
  if (name == "always") return VisibilitySchedule::kAlways;
  if (name == "never") return VisibilitySchedule::kNever;
  throw Error(ErrorCode::kValidation, "unknown visibility schedule '" + std::string(name) + "'");
}

void SessionConfig::validate() const {
  if (n_forward < 0 || n_counterfactual < 0 || n_forward + n_counterfactual == 0) {
    throw Error(ErrorCode::kValidation, "trial counts must be non-negative and not both zero");
  }
  if (schedule == VisibilitySchedule::kPaired && (n_forward % 2 != 0 || n_counterfactual % 2 != 0)) {
    throw Error(ErrorCode::kValidation, "paired schedules need even trial counts");
  }
}

std::string_view session_status_name(SessionStatus s) {
  switch (s) {
    case SessionStatus::kCreated: return "created";
    case SessionStatus::kForward: return "forward";
    case SessionStatus::kCounterfactual: return "counterfactual";
    case SessionStatus::kComplete: return "complete";
  }
  return "created";
}

namespace {

SchemaKind draw_shown(XaiCondition condition, Rng& rng) {
  switch (condition) {
    case XaiCondition::kWeights: return SchemaKind::kWeights;
    case XaiCondition::kRules: return SchemaKind::kRules;
    case XaiCondition::kHybrid:
      return std::bernoulli_distribution(0.5)(rng) ? SchemaKind::kWeights : SchemaKind::kRules;
  }
  return SchemaKind::kRules;
}

void append_phase(std::vector<ScheduledTrial>& out, const TrialPool& pool, Phase phase, int first_instance_id,
                  const SessionConfig& config, Rng& rng) {
  for (std::size_t i = 0; i < pool.size(); ++i) {
    ScheduledTrial base;
    base.phase = phase;
    base.instance_id = first_instance_id + static_cast<int>(i);
    base.instance = pool.instances[i];
    base.ai_label = pool.ai_labels[i];
    base.surrogate_label = pool.surrogate_labels[i];
    const auto push = [&](bool visible, bool deferred) {
      ScheduledTrial t = base;
      t.trial_index = static_cast<int>(out.size());
      t.xai_visible = visible;
      t.shown = visible ? draw_shown(config.condition, rng) : SchemaKind::kNone;
      t.feedback_deferred = deferred && phase == Phase::kForward;
      out.push_back(t);
    };
    switch (config.schedule) {
      case VisibilitySchedule::kPaired:
        push(false, true);
        push(true, false);
        break;
      case VisibilitySchedule::kRandomized: push(std::bernoulli_distribution(0.5)(rng), false); break;
      case VisibilitySchedule::kAlways: push(true, false); break;
      case VisibilitySchedule::kNever: push(false, false); break;
    }
  }
}

bool same_value(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

}  // namespace

std::vector<ScheduledTrial> make_schedule(const Task& task, const SessionConfig& config) {
  config.validate();
  const bool paired = config.schedule == VisibilitySchedule::kPaired;
  const auto instances_for = [&](int trials) { return static_cast<std::size_t>(paired ? trials / 2 : trials); };
  Rng rng(derive_seed(config.seed, 21));
  std::vector<ScheduledTrial> out;
  std::vector<Instance> used;
  if (config.n_forward > 0) {
    const TrialPool pool =
        select_task_instances(task, config.condition, instances_for(config.n_forward), derive_seed(config.seed, 1));
    append_phase(out, pool, Phase::kForward, 0, config, rng);
    used = pool.instances;
  }
  if (config.n_counterfactual > 0) {
    const TrialPool pool = select_task_instances(task, config.condition, instances_for(config.n_counterfactual),
                                                 derive_seed(config.seed, 2), &used);
    append_phase(out, pool, Phase::kCounterfactual, static_cast<int>(used.size()), config, rng);
  }
  return out;
}

Session::Session(std::string id, SessionConfig config, std::shared_ptr<const Task> task)
    : id_(std::move(id)), config_(std::move(config)), task_(std::move(task)) {
  if (!task_) throw Error(ErrorCode::kPrecondition, "session needs a task");
  if (id_.empty()) throw Error(ErrorCode::kValidation, "session id must be non-empty");
  schedule_ = make_schedule(*task_, config_);
}

const ScheduledTrial& Session::current() const {
  if (cursor_ >= schedule_.size()) throw Error(ErrorCode::kState, "session is complete");
  return schedule_[cursor_];
}

FeedbackPayload Session::submit(const TrialResponse& response, std::optional<SimulationDetail> simulation,
                                std::optional<double> simulated_time_s) {
  const ScheduledTrial& t = current();
  TrialRecord r;
  r.trial_index = t.trial_index;
  r.phase = t.phase;
  r.instance_id = t.instance_id;
  r.xai_visible = t.xai_visible;
  r.shown = t.shown;
  r.instance = t.instance;
  r.ai_label = t.ai_label;
  r.surrogate_label = t.surrogate_label;
  r.response_time_ms = response.response_time_ms;
  r.simulated_time_s = simulated_time_s;
  r.simulation = std::move(simulation);
  if (response.response_time_ms && !(*response.response_time_ms >= 0.0)) {
    throw Error(ErrorCode::kValidation, "response_time_ms must be non-negative");
  }

  FeedbackPayload feedback;
  if (t.phase == Phase::kForward) {
    if (!response.label || response.edited_instance) {
      throw Error(ErrorCode::kValidation, "forward trials take a label response");
    }
    r.response_label = response.label;
    r.feedback_shown = true;
    r.feedback_deferred = t.feedback_deferred;
    if (t.feedback_deferred) {
      feedback.kind = FeedbackPayload::Kind::kDeferred;
    } else {
      feedback.kind = FeedbackPayload::Kind::kFeedback;
      for (const auto& prev : records_) {
        if (prev.feedback_deferred && prev.instance_id == t.instance_id) {
          feedback.released.emplace_back(prev.trial_index, prev.ai_label);
        }
      }
      feedback.released.emplace_back(t.trial_index, t.ai_label);
    }
  } else {
    if (!response.edited_instance || response.label) {
      throw Error(ErrorCode::kValidation, "counterfactual trials take an edited instance");
    }
    const Instance shown = displayed(t.instance);
    const Instance& edited = *response.edited_instance;
    const auto& attrs = task_->models.attributes;
    std::optional<std::size_t> changed;
    for (std::size_t a = 0; a < kNumAttributes; ++a) {
      if (!std::isfinite(edited[a])) throw Error(ErrorCode::kValidation, "edited values must be finite");
      if (same_value(edited[a], shown[a])) continue;
      if (changed) throw Error(ErrorCode::kValidation, "an edit must change exactly one attribute");
      changed = a;
    }
    if (!changed) throw Error(ErrorCode::kValidation, "an edit must change exactly one attribute");
    const auto& spec = attrs[*changed];
    if (edited[*changed] < spec.min || edited[*changed] > spec.max) {
      throw Error(ErrorCode::kValidation, "edited value of '" + spec.name + "' lies outside [" +
                                              format_sig3(spec.min) + ", " + format_sig3(spec.max) + "]");
    }
    Edit e;
    e.attribute = *changed;
    e.old_value = shown[*changed];
    e.new_value = edited[*changed];
    e.delta = e.new_value - e.old_value;
    e.clamped = r.simulation && r.simulation->clamped;
    r.edit = e;
    feedback.kind = FeedbackPayload::Kind::kAcknowledged;
  }
  records_.push_back(std::move(r));
  ++cursor_;
  const auto n_forward = static_cast<std::size_t>(
      std::count_if(schedule_.begin(), schedule_.end(), [](const auto& s) { return s.phase == Phase::kForward; }));
  if (cursor_ >= schedule_.size()) {
    status_ = SessionStatus::kComplete;
  } else {
    status_ = cursor_ < n_forward ? SessionStatus::kForward : SessionStatus::kCounterfactual;
  }
  return feedback;
}

Session Session::replay(std::string id, SessionConfig config, std::shared_ptr<const Task> task,
                        const std::vector<TrialRecord>& records) {
  Session s(std::move(id), std::move(config), std::move(task));
  for (const auto& r : records) {
    const ScheduledTrial& t = s.current();
    if (t.trial_index != r.trial_index || t.instance != r.instance || t.phase != r.phase) {
      throw Error(ErrorCode::kConflict, "record " + std::to_string(r.trial_index) + " does not match the schedule");
    }
    TrialResponse response;
    response.label = r.response_label;
    response.response_time_ms = r.response_time_ms;
    if (r.edit) response.edited_instance = r.edit->apply(displayed(r.instance));
    s.submit(response, r.simulation, r.simulated_time_s);
  }
  return s;
}

SessionScore score_records(const AiModel& ai, const std::vector<TrialRecord>& records) {
  SessionScore s;
  int fwd_correct = 0;
  int with_correct = 0;
  int without_correct = 0;
  int cf_success = 0;
  for (const auto& r : records) {
    if (r.phase == Phase::kForward) {
      if (!r.response_label) continue;
      const bool correct = *r.response_label == r.ai_label;
      ++s.n_forward;
      fwd_correct += correct;
      if (r.xai_visible) {
        ++s.n_forward_with_xai;
        with_correct += correct;
      } else {
        ++s.n_forward_without_xai;
        without_correct += correct;
      }
    } else {
      if (!r.edit) continue;
      ++s.n_counterfactual;
      Instance edited = r.instance;
      edited[r.edit->attribute] = r.edit->new_value;
      cf_success += ai.predict(edited) != r.ai_label;
    }
  }
  const auto ratio = [](int a, int b) { return b > 0 ? static_cast<double>(a) / b : 0.0; };
  s.forward_accuracy = ratio(fwd_correct, s.n_forward);
  s.counterfactual_accuracy = ratio(cf_success, s.n_counterfactual);
  s.forward_with_xai = ratio(with_correct, s.n_forward_with_xai);
  s.forward_without_xai = ratio(without_correct, s.n_forward_without_xai);
  return s;
}

Session simulate_session(std::string id, const SessionConfig& config, std::shared_ptr<const Task> task,
                         const CognitiveParams& params, Controller& controller, std::uint64_t agent_seed) {
  Session session(std::move(id), config, task);
  Agent agent(task->models, config.condition, params, controller, agent_seed);
  agent.study();
  std::map<int, ForwardDecision> pending;
  int fwd_index = 0;
  int cf_index = 0;
  while (!session.complete()) {
    const ScheduledTrial t = session.current();
    SimulationDetail detail;
    if (t.phase == Phase::kForward) {
      ForwardDecision d = agent.forward_trial(t.instance, t.shown, fwd_index++);
      detail.strategy = d.action.strategy;
      detail.action_index = d.action.index;
      detail.effort = d.action.effort;
      detail.subset_size = d.action.subset_size;
      detail.p_positive = d.result.p_positive;
      detail.evidence = d.result.evidence;
      detail.n_reads = d.result.n_reads;
      detail.n_calcs = d.result.n_calcs;
      detail.execution_time = d.result.execution_time;
      detail.guessed = d.result.guessed;
      detail.trace = d.result.trace;
      TrialResponse response;
      response.label = d.response;
      const double time = d.result.total_time;
      pending.emplace(t.trial_index, std::move(d));
      const FeedbackPayload fb = session.submit(response, std::move(detail), time);
      if (fb.kind == FeedbackPayload::Kind::kFeedback) {
        agent.forward_feedback(t.instance, t.ai_label, t.shown);
        for (const auto& [index, label] : fb.released) {
          const auto it = pending.find(index);
          if (it == pending.end()) continue;
          agent.record_forward_outcome(it->second, label);
          pending.erase(it);
        }
      }
    } else {
      const CounterfactualDecision d = agent.counterfactual_trial(t.instance, t.shown, cf_index++);
      detail.strategy = d.action.strategy;
      detail.action_index = d.action.index;
      detail.depth = d.action.depth;
      detail.n_reads = d.distribution.n_reads;
      detail.n_calcs = d.distribution.n_calcs;
      detail.cold_start = d.distribution.cold_start;
      detail.fell_back = d.fell_back;
      detail.clamped = d.edit.clamped;
      detail.target = d.target;
      detail.attribute_probabilities = d.distribution.attribute_probabilities();
      detail.trace = d.distribution.trace;
      TrialResponse response;
      const Instance x = displayed(t.instance);
      response.edited_instance = d.edit.apply(x);
      session.submit(response, std::move(detail), d.total_time);
      agent.commit_edit(d.target, d.edit);
      const TrialContext ctx = agent.context(t.instance, t.shown);
      agent.record_counterfactual_outcome(d, internal_label(ctx, config.condition, d.edit.apply(x)) != d.internal);
    }
  }
  return session;
}

}  // namespace coxam
