#ifndef COBRA_SERVICE_H_
#define COBRA_SERVICE_H_

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "cobra/corpus.h"
#include "cobra/eval_run.h"
#include "cobra/metrics.h"
#include "cobra/session_store.h"
#include "cobra/stats.h"

namespace cobra {

struct ServiceOptions {
  // Session logs live at <data_dir>/<corpus>.sessions.jsonl.
  std::filesystem::path data_dir = "data";
  std::filesystem::path runs_root = "runs";
  WeightConfig weights;
  std::optional<std::string> bearer_token;
  std::optional<std::filesystem::path> static_dir;
  std::uint64_t seed = kDefaultSeed;
  // Defaults to MakeChatClient.
  std::function<std::shared_ptr<ChatClient>(const ModelConfig&)> client_factory;
  SessionStore::Clock clock;
};

// Request-level operations behind the HTTP API. Every method takes and
// returns JSON documents; failures are cobra::Error.
class Service {
 public:
  explicit Service(ServiceOptions opts);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  void AddCorpus(const std::string& name, Corpus corpus);
  const ServiceOptions& options() const { return opts_; }

  nlohmann::json ListCorpora() const;
  // Throws kDialogueNotFound.
  nlohmann::json GetDialogue(const std::string& id,
                             const std::optional<std::string>& corpus = {}) const;

  // Body: {dialogue_id, annotator_id, corpus?}.
  nlohmann::json CreateSession(const nlohmann::json& body);
  nlohmann::json GetSession(const std::string& id) const;
  // Background, history so far, the cursor turn and the label schema.
  nlohmann::json NextItem(const std::string& id) const;
  // Body: {turn_index, record: {commitment, relevance, manner, quality,
  // consistency, outcome, reasons}, correction?}. Returns the accepted
  // session and the metric series over the submitted prefix, provisional
  // until the session completes and canonical afterwards.
  nlohmann::json SubmitLabel(const std::string& id, const nlohmann::json& body);

  // kind: agreement, regression, llm-comparison, series. Cached per corpus
  // revision, parameters and weight hash. Throws kInsufficientData.
  nlohmann::json GetReport(const std::string& kind,
                           const std::map<std::string, std::string>& params);

  // Body: {model: ModelConfig, corpus?, run_id?, concurrency?, wait?}.
  nlohmann::json StartEvalRun(const nlohmann::json& body);
  // Throws kRunNotFound.
  nlohmann::json GetEvalRun(const std::string& id) const;
  void WaitForEvalRuns();

  std::size_t report_cache_hits() const;

 private:
  struct CorpusEntry {
    Corpus corpus;
    std::unique_ptr<SessionStore> sessions;
  };
  struct RunEntry {
    std::string status;  // running, complete, failed
    nlohmann::json summary;
    nlohmann::json error;
  };

  const CorpusEntry& FindCorpus(const std::optional<std::string>& name) const;
  std::pair<std::string, CorpusEntry*> FindSession(const std::string& id) const;
  Corpus Merged(const CorpusEntry& entry) const;
  nlohmann::json BuildReport(const std::string& kind,
                             const std::map<std::string, std::string>& params,
                             const CorpusEntry& entry);

  ServiceOptions opts_;
  std::map<std::string, std::unique_ptr<CorpusEntry>> corpora_;

  mutable std::mutex cache_mu_;
  std::map<std::string, nlohmann::json> report_cache_;
  std::size_t cache_hits_ = 0;

  mutable std::mutex runs_mu_;
  std::map<std::string, RunEntry> runs_;
  std::vector<std::thread> workers_;
};

// Field descriptors for the annotation form.
nlohmann::json AnnotationSchemaJson();

}  // namespace cobra

#endif  // COBRA_SERVICE_H_
