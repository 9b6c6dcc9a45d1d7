#include "coxam/http_api.hpp"

#include <httplib.h>

namespace coxam {
namespace {

void send(httplib::Response& res, const ServiceResponse& r) {
  res.status = r.status;
  if (r.content_type == "application/json") {
    res.set_content(r.body.dump(), "application/json");
  } else {
    res.set_content(r.text, r.content_type);
  }
}

}  // namespace

HttpServer::HttpServer(SessionService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  s.Get("/health", [this](const httplib::Request&, httplib::Response& res) { send(res, service_.health()); });
  s.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.create(req.body));
  });
  s.Get(R"(/sessions/([^/]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.next(req.matches[1]));
  });
  s.Post(R"(/sessions/([^/]+)/respond)", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.respond(req.matches[1], req.body));
  });
  s.Get(R"(/sessions/([^/]+)/log)", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.log(req.matches[1]));
  });
  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    const ErrorCode code = res.status == 404 ? ErrorCode::kNotFound : ErrorCode::kValidation;
    res.set_content(Json{{"code", error_code_name(code)}, {"message", "no such route"}}.dump(), "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void HttpServer::run(const std::string& host, int port) {
  if (!server_->listen(host, port)) throw Error(ErrorCode::kIo, "cannot listen on " + host + ":" + std::to_string(port));
}

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace coxam
