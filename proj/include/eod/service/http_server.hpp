#pragma once

#include <memory>
#include <string>

#include "eod/error.hpp"
#include "eod/service/session_manager.hpp"

namespace httplib {
class Server;
}

namespace eod::service {

// HTTP+JSON front end over a SessionManager. Errors are problem documents:
//   {"type": "about:blank", "title": ..., "status": ..., "code": ..., "detail": ...}
class HttpServer {
 public:
  explicit HttpServer(SessionManager& sessions);
  ~HttpServer();

  // Binds to host:port; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();
  bool running() const;

 private:
  SessionManager& sessions_;
  std::unique_ptr<httplib::Server> server_;
};

int http_status(ErrorCode code);

}  // namespace eod::service
