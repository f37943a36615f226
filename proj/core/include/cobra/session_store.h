#ifndef COBRA_SESSION_STORE_H_
#define COBRA_SESSION_STORE_H_

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cobra/corpus.h"

namespace cobra {

enum class SessionStatus { kActive, kComplete };

std::string_view SessionStatusName(SessionStatus s);

struct AnnotationSession {
  std::string session_id;
  std::string annotator_id;
  std::string dialogue_id;
  // Smallest Q/A turn index without a submission; 0 once complete.
  int cursor = 0;
  std::map<int, TurnAnnotation> submitted;
  SessionStatus status = SessionStatus::kActive;
  std::string created_at;
  std::string updated_at;
  // Turns whose label was replaced through the correction override.
  std::vector<int> corrected_turns;

  friend bool operator==(const AnnotationSession&, const AnnotationSession&) = default;
};

nlohmann::json SessionToJson(const AnnotationSession& s);

// Deterministic id for (corpus, dialogue, annotator).
std::string SessionId(std::string_view corpus, std::string_view dialogue_id,
                      std::string_view annotator_id);

// Annotation sessions of one corpus backed by an append-only JSONL log.
// Every accepted change is fsynced to the log before the call returns, and
// the constructor replays the log, ignoring a torn final line.
class SessionStore {
 public:
  using Clock = std::function<std::string()>;

  SessionStore(std::string corpus_name, const Corpus* corpus,
               std::filesystem::path log_path, Clock clock = {});

  // Idempotent per (dialogue, annotator). Throws kDialogueNotFound.
  AnnotationSession Create(const std::string& dialogue_id,
                           const std::string& annotator_id);
  bool Contains(const std::string& session_id) const;
  // Throws kSessionNotFound.
  AnnotationSession Get(const std::string& session_id) const;
  std::vector<AnnotationSession> List() const;

  // Accepts the label for the cursor turn. With `correction`, replaces an
  // already submitted label instead and records an audit entry. Throws
  // kSessionNotFound, kSessionComplete, kOutOfOrder, kSchemaViolation.
  AnnotationSession Submit(const std::string& session_id, int turn_index,
                           TurnAnnotation record, bool correction = false);

  // Every submitted label, sorted by (dialogue, annotator, turn).
  std::vector<TurnAnnotation> Annotations() const;
  // Bumped on every accepted change.
  std::uint64_t revision() const;

  // Rewrites the log as creates, current labels and audit entries.
  void Compact();

  const std::filesystem::path& log_path() const { return log_path_; }

 private:
  void Replay();
  void Apply(const nlohmann::json& entry);
  int NextCursor(const AnnotationSession& s) const;
  std::string Now() const;

  std::string corpus_name_;
  const Corpus* corpus_;
  std::filesystem::path log_path_;
  Clock clock_;
  mutable std::mutex mu_;
  std::map<std::string, AnnotationSession> sessions_;
  std::vector<nlohmann::json> audit_;
  std::uint64_t revision_ = 0;
};

}  // namespace cobra

#endif  // COBRA_SESSION_STORE_H_
