#ifndef COBRA_CHAT_CLIENT_H_
#define COBRA_CHAT_CLIENT_H_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

namespace cobra {

struct ChatRequest {
  std::string model;
  std::string system;
  std::string user;
  double temperature = 0.1;
  // Merged into the request body verbatim (provider-specific knobs).
  nlohmann::json extra = nlohmann::json::object();

  // Identity of the request for cassette lookup.
  std::string Key() const;
};

struct ChatResponse {
  std::string content;
  double latency_ms = 0.0;
};

// Failures are reported as cobra::Error:
//   kAuthFailure          401/403
//   kTransient            429, 5xx, timeouts (retry)
//   kEndpointUnreachable  connection refused or DNS failure (retry)
//   kRequestRejected      other statuses, unusable response body
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual ChatResponse Complete(const ChatRequest& request) = 0;
};

// OpenAI-style chat-completion endpoint over HTTP or HTTPS. A URL without a
// path gets /v1/chat/completions.
class HttpChatClient : public ChatClient {
 public:
  HttpChatClient(std::string endpoint_url, std::string api_key,
                 double timeout_seconds = 120.0);

  ChatResponse Complete(const ChatRequest& request) override;

  const std::string& base() const { return base_; }
  const std::string& path() const { return path_; }

 private:
  std::string base_;  // scheme://host[:port]
  std::string path_;
  std::string api_key_;
  double timeout_seconds_;
};

// Replays responses recorded in a JSONL cassette ({key, content,
// latency_ms} per line). Unknown requests raise kRequestRejected.
class CassetteClient : public ChatClient {
 public:
  explicit CassetteClient(const std::filesystem::path& cassette);

  ChatResponse Complete(const ChatRequest& request) override;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, ChatResponse> entries_;
};

// Forwards to `inner` and appends every successful exchange to a cassette.
class RecordingClient : public ChatClient {
 public:
  RecordingClient(std::shared_ptr<ChatClient> inner,
                  std::filesystem::path cassette);

  ChatResponse Complete(const ChatRequest& request) override;

 private:
  std::shared_ptr<ChatClient> inner_;
  std::filesystem::path cassette_;
  std::mutex mu_;
};

// Body sent to the endpoint: {model, messages, temperature} plus `extra`.
nlohmann::json ChatRequestBody(const ChatRequest& request);

// Pulls choices[0].message.content out of a completion body.
std::string ExtractCompletionContent(const nlohmann::json& body);

}  // namespace cobra

#endif  // COBRA_CHAT_CLIENT_H_
