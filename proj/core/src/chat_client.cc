#include "cobra/chat_client.h"

#include <chrono>
#include <fstream>

#include <httplib.h>

#include "cobra/error.h"
#include "cobra/hash.h"
#include "cobra/metrics.h"

namespace cobra {

using nlohmann::json;

std::string ChatRequest::Key() const {
  std::uint64_t h = Fnv1a(model);
  for (std::string_view part :
       {std::string_view(system), std::string_view(user)}) {
    h = Fnv1a(std::string_view("\0", 1), h);
    h = Fnv1a(part, h);
  }
  const std::string nul(1, '\0');
  h = Fnv1a(nul + FormatDouble(temperature) + nul + extra.dump(), h);
  return HexDigest(h);
}

json ChatRequestBody(const ChatRequest& request) {
  json body = {{"model", request.model},
               {"messages",
                {{{"role", "system"}, {"content", request.system}},
                 {{"role", "user"}, {"content", request.user}}}},
               {"temperature", request.temperature}};
  if (request.extra.is_object()) {
    for (const auto& [k, v] : request.extra.items()) body[k] = v;
  }
  return body;
}

std::string ExtractCompletionContent(const json& body) {
  const json* content = nullptr;
  if (body.contains("choices") && body["choices"].is_array() &&
      !body["choices"].empty()) {
    const json& choice = body["choices"][0];
    if (choice.contains("message") && choice["message"].contains("content")) {
      content = &choice["message"]["content"];
    } else if (choice.contains("text")) {
      content = &choice["text"];
    }
  }
  if (content == nullptr || !content->is_string()) {
    throw Error(ErrorCode::kRequestRejected,
                "completion body has no choices[0].message.content");
  }
  return content->get<std::string>();
}

HttpChatClient::HttpChatClient(std::string endpoint_url, std::string api_key,
                               double timeout_seconds)
    : api_key_(std::move(api_key)), timeout_seconds_(timeout_seconds) {
  const auto scheme_end = endpoint_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kEndpointUnreachable,
                "endpoint URL needs a scheme: " + endpoint_url, endpoint_url);
  }
  const std::string scheme = endpoint_url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::kEndpointUnreachable,
                "unsupported endpoint scheme: " + scheme, endpoint_url);
  }
  const auto path_start = endpoint_url.find('/', scheme_end + 3);
  base_ = endpoint_url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "" : endpoint_url.substr(path_start);
  if (path_.empty() || path_ == "/") path_ = "/v1/chat/completions";
}

ChatResponse HttpChatClient::Complete(const ChatRequest& request) {
  httplib::Client client(base_);
  const auto timeout = std::chrono::duration<double>(timeout_seconds_);
  client.set_connection_timeout(
      std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(
      std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(
      std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const auto start = std::chrono::steady_clock::now();
  auto res = client.Post(path_, headers, ChatRequestBody(request).dump(),
                         "application/json");
  const double latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                start)
          .count();
  if (!res) {
    const auto err = res.error();
    const std::string what = httplib::to_string(err);
    if (err == httplib::Error::Connection || err == httplib::Error::SSLConnection) {
      throw Error(ErrorCode::kEndpointUnreachable,
                  "cannot reach " + base_ + ": " + what, base_);
    }
    throw Error(ErrorCode::kTransient, "request to " + base_ + " failed: " + what,
                base_);
  }
  const int status = res->status;
  if (status == 401 || status == 403) {
    throw Error(ErrorCode::kAuthFailure,
                "endpoint rejected credentials (HTTP " + std::to_string(status) + ")",
                std::to_string(status));
  }
  if (status == 429 || status >= 500) {
    throw Error(ErrorCode::kTransient, "HTTP " + std::to_string(status),
                std::to_string(status));
  }
  if (status < 200 || status >= 300) {
    throw Error(ErrorCode::kRequestRejected,
                "HTTP " + std::to_string(status) + ": " + res->body.substr(0, 200),
                std::to_string(status));
  }
  json body = json::parse(res->body, nullptr, false);
  if (body.is_discarded()) {
    throw Error(ErrorCode::kRequestRejected, "completion body is not JSON");
  }
  return {ExtractCompletionContent(body), latency_ms};
}

CassetteClient::CassetteClient(const std::filesystem::path& cassette) {
  std::ifstream in(cassette);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open cassette " + cassette.string(),
                cassette.string());
  }
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("key") || !j.contains("content")) {
      throw Error(ErrorCode::kMalformedFile,
                  cassette.string() + ":" + std::to_string(line_no) +
                      ": bad cassette entry",
                  std::to_string(line_no));
    }
    entries_[j["key"].get<std::string>()] = {j["content"].get<std::string>(),
                                             j.value("latency_ms", 0.0)};
  }
}

ChatResponse CassetteClient::Complete(const ChatRequest& request) {
  auto it = entries_.find(request.Key());
  if (it == entries_.end()) {
    throw Error(ErrorCode::kRequestRejected,
                "no recorded response for request " + request.Key(), request.Key());
  }
  return it->second;
}

RecordingClient::RecordingClient(std::shared_ptr<ChatClient> inner,
                                 std::filesystem::path cassette)
    : inner_(std::move(inner)), cassette_(std::move(cassette)) {}

ChatResponse RecordingClient::Complete(const ChatRequest& request) {
  ChatResponse r = inner_->Complete(request);
  const json entry = {
      {"key", request.Key()}, {"content", r.content}, {"latency_ms", r.latency_ms}};
  std::lock_guard lock(mu_);
  std::ofstream out(cassette_, std::ios::app);
  out << entry.dump() << '\n';
  if (!out) {
    throw Error(ErrorCode::kIoError, "cannot append to " + cassette_.string(),
                cassette_.string());
  }
  return r;
}

}  // namespace cobra
