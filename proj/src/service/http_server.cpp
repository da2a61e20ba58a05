#include "eod/service/http_server.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>

#include "eod/error.hpp"

namespace eod::service {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::state_conflict:
    case ErrorCode::stale_proposal:
    case ErrorCode::idempotency_conflict: return 409;
    case ErrorCode::io_error: return 500;
    default: return 400;
  }
}

namespace {

const char* title(int status) {
  switch (status) {
    case 404: return "Not Found";
    case 409: return "Conflict";
    case 500: return "Internal Server Error";
    default: return "Bad Request";
  }
}

void problem(httplib::Response& res, int status, std::string_view code, const std::string& detail) {
  const json body = {
      {"type", "about:blank"}, {"title", title(status)}, {"status", status}, {"code", code}, {"detail", detail}};
  res.status = status;
  res.set_content(body.dump(), "application/problem+json");
}

void reply(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("request body: ") + e.what());
  }
}

std::optional<std::string> idempotency_key(const httplib::Request& req, const json& body) {
  if (req.has_header("Idempotency-Key")) return req.get_header_value("Idempotency-Key");
  if (body.contains("idempotency_key") && body["idempotency_key"].is_string())
    return body["idempotency_key"].get<std::string>();
  return std::nullopt;
}

std::string mime_of(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  return "application/octet-stream";
}

template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      problem(res, http_status(e.code()), to_string(e.code()), e.what());
    } catch (const json::exception& e) {
      problem(res, 400, "invalid_argument", e.what());
    } catch (const std::exception& e) {
      problem(res, 500, "io_error", e.what());
    }
  };
}

}  // namespace

HttpServer::HttpServer(SessionManager& sessions) : sessions_(sessions), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  s.Get("/health", guarded([](const auto&, auto& res) { reply(res, {{"ok", true}}); }));

  s.Post("/sessions", guarded([this](const auto& req, auto& res) {
           reply(res, sessions_.create(body_of(req)), 201);
         }));
  s.Get(R"(/sessions/([^/]+))", guarded([this](const auto& req, auto& res) {
          reply(res, sessions_.snapshot(req.matches[1]));
        }));
  s.Post(R"(/sessions/([^/]+)/advance)", guarded([this](const auto& req, auto& res) {
           const auto body = body_of(req);
           reply(res, sessions_.advance(req.matches[1], idempotency_key(req, body)));
         }));
  s.Post(R"(/sessions/([^/]+)/label)", guarded([this](const auto& req, auto& res) {
           const auto body = body_of(req);
           reply(res, sessions_.label(req.matches[1], body, idempotency_key(req, body)));
         }));
  s.Get(R"(/sessions/([^/]+)/report)", guarded([this](const auto& req, auto& res) {
          reply(res, sessions_.report(req.matches[1]));
        }));
  s.Get(R"(/sessions/([^/]+)/clusters/current)", guarded([this](const auto& req, auto& res) {
          reply(res, sessions_.current(req.matches[1]));
        }));
  s.Get(R"(/sessions/([^/]+)/crops/([^/]+))", guarded([this](const auto& req, auto& res) {
          const auto path = sessions_.crop_file(req.matches[1], req.matches[2]);
          if (!path) fail(ErrorCode::not_found, "no local crop for candidate '" + std::string(req.matches[2]) + "'");
          std::ifstream in(*path, std::ios::binary);
          std::ostringstream buf;
          buf << in.rdbuf();
          res.set_content(buf.str(), mime_of(*path));
        }));

  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.body.empty()) problem(res, res.status, res.status == 404 ? "not_found" : "invalid_argument",
                                  "no route for " + req.method + " " + req.path);
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) port = server_->bind_to_any_port(host);
  else if (!server_->bind_to_port(host, port)) port = -1;
  require(port > 0, ErrorCode::io_error, "cannot bind " + host);
  return port;
}

void HttpServer::listen() { server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_) server_->stop();
}

bool HttpServer::running() const { return server_->is_running(); }

}  // namespace eod::service
