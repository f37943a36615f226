#ifndef COBRA_HTTP_SERVER_H_
#define COBRA_HTTP_SERVER_H_

#include <memory>
#include <string>

#include "cobra/error.h"
#include "cobra/service.h"

namespace httplib {
class Server;
}

namespace cobra {

// HTTP status used for a domain error in API responses.
int HttpStatusFor(ErrorCode code);

// JSON front end for a Service. Routes:
//   GET  /corpora                GET  /dialogues/{id}
//   POST /sessions               GET  /sessions/{id}
//   GET  /sessions/{id}/next     POST /sessions/{id}/labels
//   GET  /reports/{kind}         POST /eval-runs
//   GET  /eval-runs/{id}         GET  /health
// Errors come back as {code, message, detail}. When the service has a bearer
// token every API route requires it; static files under / do not.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  // Binds to an ephemeral port and returns it; -1 on failure.
  int BindToAnyPort(const std::string& host);
  bool Bind(const std::string& host, int port);
  // Blocks serving until Stop().
  bool ListenAfterBind();
  void Stop();
  void WaitUntilReady() const;

 private:
  void InstallRoutes();

  Service& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace cobra

#endif  // COBRA_HTTP_SERVER_H_
