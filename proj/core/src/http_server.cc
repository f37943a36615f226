#include "cobra/http_server.h"

#include <httplib.h>

namespace cobra {

using nlohmann::json;

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDialogueNotFound:
    case ErrorCode::kSessionNotFound:
    case ErrorCode::kRunNotFound:
    case ErrorCode::kTurnNotFound:
      return 404;
    case ErrorCode::kOutOfOrder:
    case ErrorCode::kSessionComplete:
      return 409;
    case ErrorCode::kInsufficientData:
    case ErrorCode::kNoOverlap:
    case ErrorCode::kNoSharedItems:
      return 422;
    case ErrorCode::kAuthFailure:
    case ErrorCode::kEndpointUnreachable:
    case ErrorCode::kTransient:
      return 502;
    case ErrorCode::kIoError:
      return 500;
    default:
      return 400;
  }
}

namespace {

constexpr const char* kJson = "application/json";

void SendJson(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void SendError(httplib::Response& res, int status, std::string_view code,
               const std::string& message, const std::string& detail) {
  SendJson(res, {{"code", code}, {"message", message}, {"detail", detail}}, status);
}

json ParseBody(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded()) {
    throw Error(ErrorCode::kMalformedFile, "request body is not valid JSON", "body");
  }
  return body;
}

std::map<std::string, std::string> Params(const httplib::Request& req) {
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : req.params) out[k] = v;
  return out;
}

bool IsApiPath(const std::string& path) {
  for (const char* prefix : {"/corpora", "/dialogues/", "/sessions", "/reports/",
                             "/eval-runs"}) {
    if (path.rfind(prefix, 0) == 0) return true;
  }
  return false;
}

template <typename F>
httplib::Server::Handler Wrap(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      SendError(res, HttpStatusFor(e.code()), ErrorCodeName(e.code()), e.what(),
                e.detail());
    } catch (const json::exception& e) {
      SendError(res, 400, "SchemaViolation", e.what(), "");
    } catch (const std::exception& e) {
      SendError(res, 500, "Internal", e.what(), "");
    }
  };
}

}  // namespace

HttpServer::HttpServer(Service& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  InstallRoutes();
}

HttpServer::~HttpServer() { Stop(); }

void HttpServer::InstallRoutes() {
  httplib::Server& s = *server_;
  const auto token = service_.options().bearer_token;
  s.set_pre_routing_handler([token](const httplib::Request& req, httplib::Response& res) {
    if (!token || !IsApiPath(req.path)) return httplib::Server::HandlerResponse::Unhandled;
    if (req.get_header_value("Authorization") == "Bearer " + *token) {
      return httplib::Server::HandlerResponse::Unhandled;
    }
    SendError(res, 401, "Unauthorized", "missing or wrong bearer token", "");
    return httplib::Server::HandlerResponse::Handled;
  });

  s.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    SendJson(res, {{"status", "ok"}});
  });
  s.Get("/corpora", Wrap([this](const httplib::Request&, httplib::Response& res) {
          SendJson(res, service_.ListCorpora());
        }));
  s.Get(R"(/dialogues/(.+))", Wrap([this](const httplib::Request& req, httplib::Response& res) {
          std::optional<std::string> corpus;
          if (req.has_param("corpus")) corpus = req.get_param_value("corpus");
          SendJson(res, service_.GetDialogue(req.matches[1], corpus));
        }));
  s.Post("/sessions", Wrap([this](const httplib::Request& req, httplib::Response& res) {
           SendJson(res, service_.CreateSession(ParseBody(req)), 201);
         }));
  s.Get(R"(/sessions/([^/]+)/next)",
        Wrap([this](const httplib::Request& req, httplib::Response& res) {
          SendJson(res, service_.NextItem(req.matches[1]));
        }));
  s.Get(R"(/sessions/([^/]+))", Wrap([this](const httplib::Request& req, httplib::Response& res) {
          SendJson(res, service_.GetSession(req.matches[1]));
        }));
  s.Post(R"(/sessions/([^/]+)/labels)",
         Wrap([this](const httplib::Request& req, httplib::Response& res) {
           SendJson(res, service_.SubmitLabel(req.matches[1], ParseBody(req)));
         }));
  s.Get(R"(/reports/([^/]+))", Wrap([this](const httplib::Request& req, httplib::Response& res) {
          SendJson(res, service_.GetReport(req.matches[1], Params(req)));
        }));
  s.Post("/eval-runs", Wrap([this](const httplib::Request& req, httplib::Response& res) {
           SendJson(res, service_.StartEvalRun(ParseBody(req)), 202);
         }));
  s.Get(R"(/eval-runs/([^/]+))", Wrap([this](const httplib::Request& req, httplib::Response& res) {
          SendJson(res, service_.GetEvalRun(req.matches[1]));
        }));

  if (const auto& dir = service_.options().static_dir) {
    s.set_mount_point("/", dir->string());
  }
}

int HttpServer::BindToAnyPort(const std::string& host) {
  return server_->bind_to_any_port(host);
}

bool HttpServer::Bind(const std::string& host, int port) {
  return server_->bind_to_port(host, port);
}

bool HttpServer::ListenAfterBind() { return server_->listen_after_bind(); }

void HttpServer::Stop() {
  if (server_) server_->stop();
}

void HttpServer::WaitUntilReady() const { server_->wait_until_ready(); }

}  // namespace cobra
