#pragma once

#include <memory>
#include <string>
#include <thread>

#include "coxam/service.hpp"

namespace httplib {
class Server;
}

namespace coxam {

/// Routes:
///   GET  /health
///   POST /sessions                  -> 201 {session_id, config, n_trials, trial}
///   GET  /sessions/{id}/next        -> trial payload or end-of-session marker
///   POST /sessions/{id}/respond     -> feedback payload with the next trial
///   GET  /sessions/{id}/log         -> JSONL trial log
/// Errors are {"code", "message"} with the status from http_status_for.
class HttpServer {
 public:
  explicit HttpServer(SessionService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and serves on a background thread; port 0 picks a free port. Returns the port.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

 private:
  SessionService& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace coxam
