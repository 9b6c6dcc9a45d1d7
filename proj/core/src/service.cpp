#include "coxam/service.hpp"

#include <chrono>
#include <cstdio>
#include <random>

namespace coxam {

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kParse:
    case ErrorCode::kValidation: return 400;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConflict:
    case ErrorCode::kState: return 409;
    case ErrorCode::kDatasetTooSmall:
    case ErrorCode::kInfeasible:
    case ErrorCode::kPrecondition: return 422;
    case ErrorCode::kUnavailable: return 503;
    case ErrorCode::kInvariant:
    case ErrorCode::kStructure:
    case ErrorCode::kIo: return 500;
  }
  return 500;
}

ServiceResponse error_response(ErrorCode code, const std::string& message) {
  ServiceResponse r;
  r.status = http_status_for(code);
  r.body = Json{{"code", error_code_name(code)}, {"message", message}};
  return r;
}

namespace {

Json parse_body(const std::string& body) {
  if (body.find_first_not_of(" \t\r\n") == std::string::npos) return Json::object();
  try {
    return Json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("request body is not JSON: ") + e.what());
  }
}

template <typename F>
ServiceResponse guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    return error_response(e.code(), e.what());
  } catch (const nlohmann::json::exception& e) {
    return error_response(ErrorCode::kValidation, e.what());
  } catch (const std::exception& e) {
    return error_response(ErrorCode::kIo, e.what());
  }
}

}  // namespace

SessionService::SessionService(std::shared_ptr<SessionStore> store, TaskProvider tasks)
    : store_(std::move(store)), tasks_(std::move(tasks)) {
  if (!store_ || !tasks_) throw Error(ErrorCode::kPrecondition, "session service needs a store and a task provider");
}

std::shared_ptr<const Task> SessionService::task_for(const SessionConfig& config) {
  std::lock_guard lock(mutex_);
  const auto key = std::make_pair(config.scenario, config.complexity);
  auto it = task_cache_.find(key);
  if (it != task_cache_.end()) return it->second;
  auto task = tasks_(config.scenario, config.complexity);
  if (!task) throw Error(ErrorCode::kNotFound, "no task for scenario '" + config.scenario + "'");
  task_cache_[key] = task;
  return task;
}

std::string SessionService::fresh_id() {
  static thread_local std::mt19937_64 gen(std::random_device{}() ^
                                          static_cast<std::uint64_t>(
                                              std::chrono::steady_clock::now().time_since_epoch().count()));
  for (;;) {
    std::uint64_t n;
    {
      std::lock_guard lock(mutex_);
      n = gen() ^ ++id_counter_;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "s%016llx", static_cast<unsigned long long>(n));
    if (!store_->exists(buf)) return buf;
  }
}

std::shared_ptr<SessionService::Live> SessionService::live(const std::string& id) {
  {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it != sessions_.end()) return it->second;
  }
  if (!valid_session_id(id) || !store_->exists(id)) throw Error(ErrorCode::kNotFound, "unknown session '" + id + "'");
  StoredSession stored = store_->load(id);
  auto task = task_for(stored.config);
  auto entry = std::make_shared<Live>();
  entry->session = std::make_unique<Session>(Session::replay(id, stored.config, task, stored.records));
  std::lock_guard lock(mutex_);
  auto [it, inserted] = sessions_.emplace(id, entry);
  return it->second;
}

void SessionService::forget(const std::string& id) {
  std::lock_guard lock(mutex_);
  sessions_.erase(id);
}

ServiceResponse SessionService::create(const std::string& body) {
  return guarded([&] {
    Json j = parse_body(body);
    if (!j.is_object()) throw Error(ErrorCode::kValidation, "session request must be a JSON object");
    std::string id;
    if (j.contains("session_id")) {
      if (!j["session_id"].is_string()) throw Error(ErrorCode::kValidation, "session_id must be a string");
      id = j["session_id"].get<std::string>();
      j.erase("session_id");
      if (!valid_session_id(id)) throw Error(ErrorCode::kValidation, "session id must match [A-Za-z0-9_-]{1,64}");
    } else {
      id = fresh_id();
    }
    const SessionConfig config = session_config_from_json(j);
    auto task = task_for(config);
    auto entry = std::make_shared<Live>();
    entry->session = std::make_unique<Session>(id, config, task);
    {
      std::lock_guard lock(mutex_);
      if (sessions_.count(id)) throw Error(ErrorCode::kConflict, "session '" + id + "' already exists");
    }
    store_->create(id, config);
    {
      std::lock_guard lock(mutex_);
      sessions_[id] = entry;
    }
    ServiceResponse r;
    r.status = 201;
    r.body = Json{{"schema_version", kSchemaVersion},
                  {"session_id", id},
                  {"config", to_json(config)},
                  {"n_trials", entry->session->schedule().size()},
                  {"trial", trial_payload(*entry->session)}};
    return r;
  });
}

ServiceResponse SessionService::next(const std::string& id) {
  return guarded([&] {
    auto entry = live(id);
    std::lock_guard lock(entry->mutex);
    ServiceResponse r;
    r.body = trial_payload(*entry->session);
    return r;
  });
}

ServiceResponse SessionService::respond(const std::string& id, const std::string& body) {
  return guarded([&] {
    auto entry = live(id);
    std::lock_guard lock(entry->mutex);
    Session& s = *entry->session;
    if (s.complete()) throw Error(ErrorCode::kState, "session is complete");
    const TrialResponse response = trial_response_from_json(parse_body(body), s);
    const FeedbackPayload feedback = s.submit(response);
    try {
      store_->append(id, s.records().back());
    } catch (...) {
      // The in-memory session is ahead of the log; drop it so the next request replays from disk.
      forget(id);
      throw;
    }
    ServiceResponse r;
    r.body = feedback_payload(s, feedback);
    r.body["next"] = trial_payload(s);
    return r;
  });
}

ServiceResponse SessionService::log(const std::string& id) {
  return guarded([&] {
    if (!valid_session_id(id) || !store_->exists(id)) {
      throw Error(ErrorCode::kNotFound, "unknown session '" + id + "'");
    }
    ServiceResponse r;
    r.text = store_->jsonl(id);
    r.content_type = "application/x-ndjson";
    return r;
  });
}

ServiceResponse SessionService::health() const {
  ServiceResponse r;
  r.body = Json{{"schema_version", kSchemaVersion}, {"status", "ok"}};
  return r;
}

}  // namespace coxam
