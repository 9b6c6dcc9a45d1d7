#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "coxam/session_store.hpp"

namespace coxam {

/// Supplies the task a session runs on. Called once per (scenario, complexity) and cached.
using TaskProvider = std::function<std::shared_ptr<const Task>(const std::string& scenario, Complexity)>;

/// HTTP-agnostic result: status code and a JSON body, or a plain-text body for logs.
struct ServiceResponse {
  int status = 200;
  Json body;
  std::string text;
  std::string content_type = "application/json";
};

/// HTTP status used for each error code.
int http_status_for(ErrorCode code);

/// Routes participant traffic to sessions. Every accepted response is appended to the store
/// before it is acknowledged; sessions missing from memory are rebuilt from the store.
/// Thread-safe: requests on different sessions run concurrently, one session is serialized.
class SessionService {
 public:
  SessionService(std::shared_ptr<SessionStore> store, TaskProvider tasks);

  /// Body: session config fields plus an optional "session_id".
  ServiceResponse create(const std::string& body);
  ServiceResponse next(const std::string& id);
  ServiceResponse respond(const std::string& id, const std::string& body);
  ServiceResponse log(const std::string& id);
  ServiceResponse health() const;

  SessionStore& store() { return *store_; }

 private:
  struct Live {
    std::mutex mutex;
    std::unique_ptr<Session> session;
  };

  std::shared_ptr<const Task> task_for(const SessionConfig& config);
  std::shared_ptr<Live> live(const std::string& id);
  void forget(const std::string& id);
  std::string fresh_id();

  std::shared_ptr<SessionStore> store_;
  TaskProvider tasks_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Live>> sessions_;
  std::map<std::pair<std::string, Complexity>, std::shared_ptr<const Task>> task_cache_;
  std::uint64_t id_counter_ = 0;
};

/// {"code": ..., "message": ...} with the matching HTTP status.
ServiceResponse error_response(ErrorCode code, const std::string& message);

}  // namespace coxam
