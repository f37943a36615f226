#ifndef COBRA_EVAL_RUN_H_
#define COBRA_EVAL_RUN_H_

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cobra/chat_client.h"
#include "cobra/corpus.h"
#include "cobra/prompt.h"

namespace cobra {

struct ModelConfig {
  std::string endpoint_url;
  std::string model_name;
  // Name of the environment variable holding the key; empty for no key.
  std::string api_key_ref;
  double temperature = 0.1;
  int max_retries = 3;
  double rate_limit = 60.0;  // requests per minute, shared by all workers
  PromptVariant prompt_variant = PromptVariant::kZeroShot;
  // Opaque provider parameters merged into each request body.
  nlohmann::json reasoning_budget = nlohmann::json::object();
  double backoff_initial_seconds = 1.0;
  double backoff_max_seconds = 30.0;
  double timeout_seconds = 120.0;

  // Throws kOutOfRange naming the field.
  void Validate() const;
  nlohmann::json ToJson() const;
  static ModelConfig FromJson(const nlohmann::json& j);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// One attempted Q/A turn. A record either carries a parsed annotation or a
// failure; raw_response is present whenever the endpoint answered.
struct TurnRecord {
  std::string dialogue_id;
  int turn_index = 0;
  std::string prompt_hash;
  std::optional<std::string> raw_response;
  std::optional<TurnAnnotation> annotation;
  std::string failure_code;  // ErrorCodeName, empty on success
  std::string failure_message;
  double latency_ms = 0.0;
  int attempts = 0;

  bool ok() const { return annotation.has_value(); }

  friend bool operator==(const TurnRecord&, const TurnRecord&) = default;
};

nlohmann::json TurnRecordToJson(const TurnRecord& r);
TurnRecord TurnRecordFromJson(const nlohmann::json& j);

struct EvalRun {
  std::string run_id;
  ModelConfig model;
  std::string corpus_ref;
  // Annotator id given to parsed annotations.
  std::string annotator_id;
  // Ordered by dialogue id, then turn.
  std::vector<TurnRecord> records;
  int parsed = 0;
  int retried = 0;  // turns that needed more than one attempt
  int failed = 0;
  bool complete = false;

  std::vector<TurnAnnotation> Annotations() const;
  // Manifest form: everything except the records.
  nlohmann::json ManifestJson() const;

  friend bool operator==(const EvalRun&, const EvalRun&) = default;
};

// Default annotator id for a model run: "<model_name>/<variant>".
std::string ModelAnnotatorId(const ModelConfig& cfg);

// Default run id derived from model, variant and corpus reference.
std::string DefaultRunId(const ModelConfig& cfg, std::string_view corpus_ref);

// Files of one run under <root>/<run_id>/: manifest.json and records.jsonl.
// Each turn writes a "raw" line before parsing and a "result" line after;
// Load re-parses raw lines that lack a result and ignores a torn last line.
class RunStore {
 public:
  RunStore(std::filesystem::path root, std::string run_id);

  const std::filesystem::path& dir() const { return dir_; }
  bool Exists() const;

  void WriteManifest(const EvalRun& run);
  void AppendRaw(const TurnRecord& r);
  void AppendResult(const TurnRecord& r);

  // Records keyed in file order, last write wins.
  std::vector<TurnRecord> LoadRecords() const;
  // Manifest plus records; counts recomputed from the records.
  EvalRun Load() const;
  // LoadRecords, also persisting results for re-parsed raw lines.
  std::vector<TurnRecord> Recover();

 private:
  std::vector<std::pair<TurnRecord, bool>> ReadLines() const;
  void AppendLine(const nlohmann::json& line);

  std::filesystem::path dir_;
  std::mutex mu_;
};

// Minimum-interval limiter shared across workers.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;
  explicit RateLimiter(double per_minute);
  void Acquire();

 private:
  std::mutex mu_;
  Clock::duration interval_;
  Clock::time_point next_;
};

struct RunOptions {
  std::filesystem::path runs_root = "runs";
  std::optional<std::string> run_id;
  std::string corpus_ref;
  std::optional<std::string> annotator_id;
  int concurrency = 1;
  std::uint64_t seed = 20240601;
  // Restrict to these dialogues; all when empty.
  std::vector<std::string> dialogue_ids;
  // Stop after issuing this many new requests (the run stays incomplete).
  std::optional<int> max_turns;
  // Used for backoff waits; tests substitute a no-op.
  std::function<void(double seconds)> sleep;
};

// Queries `client` once per Q/A turn with the growing-history prompt. Turns
// already recorded under the run id are skipped. Transient failures are
// retried with exponential backoff; a turn still failing afterwards, or whose
// response cannot be parsed, is recorded as failed. Throws kAuthFailure, and
// kEndpointUnreachable when the endpoint stays unreachable; records written so
// far remain for a later resume.
EvalRun RunEvaluation(const Corpus& corpus, const ModelConfig& cfg,
                      ChatClient& client, const RunOptions& opts);

// Client for `cfg`: "cassette:<path>" endpoints replay a recording, anything
// else goes over HTTP with the key read from cfg.api_key_ref. Throws
// kAuthFailure when the named variable is unset.
std::shared_ptr<ChatClient> MakeChatClient(const ModelConfig& cfg);

}  // namespace cobra

#endif  // COBRA_EVAL_RUN_H_
