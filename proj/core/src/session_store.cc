#include "cobra/session_store.h"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <set>
#include <sstream>
#include <tuple>

#include "cobra/error.h"
#include "cobra/hash.h"
#include "file_util.h"

namespace cobra {

using nlohmann::json;

namespace {

std::string UtcNow() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof(out), "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

[[noreturn]] void NotFound(const std::string& id) {
  throw Error(ErrorCode::kSessionNotFound, "no session '" + id + "'", id);
}

}  // namespace

std::string_view SessionStatusName(SessionStatus s) {
  return s == SessionStatus::kComplete ? "complete" : "active";
}

json SessionToJson(const AnnotationSession& s) {
  json submitted = json::object();
  for (const auto& [turn, a] : s.submitted) {
    submitted[std::to_string(turn)] = AnnotationToJson(a);
  }
  return {{"session_id", s.session_id},
          {"annotator_id", s.annotator_id},
          {"dialogue_id", s.dialogue_id},
          {"cursor", s.cursor},
          {"status", SessionStatusName(s.status)},
          {"submitted", std::move(submitted)},
          {"created_at", s.created_at},
          {"updated_at", s.updated_at},
          {"corrected_turns", s.corrected_turns}};
}

std::string SessionId(std::string_view corpus, std::string_view dialogue_id,
                      std::string_view annotator_id) {
  const std::string_view nul("\0", 1);
  std::uint64_t h = Fnv1a(corpus);
  h = Fnv1a(dialogue_id, Fnv1a(nul, h));
  h = Fnv1a(annotator_id, Fnv1a(nul, h));
  return "s-" + HexDigest(h);
}

SessionStore::SessionStore(std::string corpus_name, const Corpus* corpus,
                           std::filesystem::path log_path, Clock clock)
    : corpus_name_(std::move(corpus_name)),
      corpus_(corpus),
      log_path_(std::move(log_path)),
      clock_(std::move(clock)) {
  if (log_path_.has_parent_path()) {
    std::filesystem::create_directories(log_path_.parent_path());
  }
  Replay();
}

std::string SessionStore::Now() const { return clock_ ? clock_() : UtcNow(); }

int SessionStore::NextCursor(const AnnotationSession& s) const {
  const Dialogue* d = corpus_->FindDialogue(s.dialogue_id);
  if (d == nullptr) return 0;
  for (const Turn& t : d->turns) {
    if (t.is_qa_pair && !s.submitted.count(t.index)) return t.index;
  }
  return 0;
}

void SessionStore::Apply(const json& entry) {
  const std::string op = entry.at("op").get<std::string>();
  const std::string id = entry.at("session_id").get<std::string>();
  const std::string at = entry.value("at", "");
  if (op == "create") {
    if (sessions_.count(id)) return;
    AnnotationSession s;
    s.session_id = id;
    s.dialogue_id = entry.at("dialogue_id").get<std::string>();
    s.annotator_id = entry.at("annotator_id").get<std::string>();
    s.created_at = s.updated_at = at;
    s.cursor = NextCursor(s);
    s.status = s.cursor == 0 ? SessionStatus::kComplete : SessionStatus::kActive;
    sessions_.emplace(id, std::move(s));
  } else if (op == "label" || op == "correct") {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) {
      throw Error(ErrorCode::kMalformedFile,
                  log_path_.string() + ": label for unknown session " + id, id);
    }
    AnnotationSession& s = it->second;
    const int turn = entry.at("turn_index").get<int>();
    s.submitted[turn] = AnnotationFromJson(entry.at("record"), "session log record");
    if (op == "correct") {
      if (std::find(s.corrected_turns.begin(), s.corrected_turns.end(), turn) ==
          s.corrected_turns.end()) {
        s.corrected_turns.push_back(turn);
        std::sort(s.corrected_turns.begin(), s.corrected_turns.end());
      }
      audit_.push_back(entry);
    }
    s.cursor = NextCursor(s);
    s.status = s.cursor == 0 ? SessionStatus::kComplete : SessionStatus::kActive;
    s.updated_at = std::max(s.updated_at, at);
  } else {
    throw Error(ErrorCode::kMalformedFile,
                log_path_.string() + ": unknown op '" + op + "'", op);
  }
  ++revision_;
}

void SessionStore::Replay() {
  if (!std::filesystem::exists(log_path_)) return;
  internal::RepairTornTail(log_path_);
  std::istringstream in(internal::ReadFile(log_path_));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json entry = json::parse(line, nullptr, false);
    if (entry.is_discarded()) {
      if (in.peek() == EOF) break;  // torn final write
      throw Error(ErrorCode::kMalformedFile,
                  log_path_.string() + ":" + std::to_string(line_no) + ": not JSON",
                  std::to_string(line_no));
    }
    try {
      Apply(entry);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedFile,
                  log_path_.string() + ":" + std::to_string(line_no) + ": " + e.what(),
                  std::to_string(line_no));
    }
  }
}

AnnotationSession SessionStore::Create(const std::string& dialogue_id,
                                       const std::string& annotator_id) {
  if (corpus_->FindDialogue(dialogue_id) == nullptr) {
    throw Error(ErrorCode::kDialogueNotFound, "no dialogue '" + dialogue_id + "'",
                dialogue_id);
  }
  if (annotator_id.empty()) {
    throw Error(ErrorCode::kSchemaViolation, "annotator_id is empty", "annotator_id");
  }
  const std::string id = SessionId(corpus_name_, dialogue_id, annotator_id);
  std::lock_guard lock(mu_);
  if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
  const json entry = {{"op", "create"},
                      {"session_id", id},
                      {"dialogue_id", dialogue_id},
                      {"annotator_id", annotator_id},
                      {"at", Now()}};
  internal::AppendDurable(log_path_, entry.dump());
  Apply(entry);
  return sessions_.at(id);
}

bool SessionStore::Contains(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  return sessions_.count(session_id) > 0;
}

AnnotationSession SessionStore::Get(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) NotFound(session_id);
  return it->second;
}

std::vector<AnnotationSession> SessionStore::List() const {
  std::lock_guard lock(mu_);
  std::vector<AnnotationSession> out;
  for (const auto& [id, s] : sessions_) out.push_back(s);
  return out;
}

AnnotationSession SessionStore::Submit(const std::string& session_id, int turn_index,
                                       TurnAnnotation record, bool correction) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) NotFound(session_id);
  const AnnotationSession& s = it->second;
  const std::string turn = std::to_string(turn_index);
  if (correction) {
    if (!s.submitted.count(turn_index)) {
      throw Error(ErrorCode::kOutOfOrder,
                  "turn " + turn + " has no label to correct", turn);
    }
  } else {
    if (s.status == SessionStatus::kComplete) {
      throw Error(ErrorCode::kSessionComplete,
                  "session " + session_id + " is complete", session_id);
    }
    if (turn_index != s.cursor) {
      throw Error(ErrorCode::kOutOfOrder,
                  "turn " + turn + " submitted but the next turn is " +
                      std::to_string(s.cursor),
                  std::to_string(s.cursor));
    }
  }
  record.dialogue_id = s.dialogue_id;
  record.annotator_id = s.annotator_id;
  record.turn_index = turn_index;
  const Dialogue* d = corpus_->FindDialogue(s.dialogue_id);
  record = ValidateAnnotation(record, *d);

  json entry = {{"op", correction ? "correct" : "label"},
                {"session_id", session_id},
                {"turn_index", turn_index},
                {"record", AnnotationToJson(record)},
                {"at", Now()}};
  if (correction) entry["previous"] = AnnotationToJson(s.submitted.at(turn_index));
  internal::AppendDurable(log_path_, entry.dump());
  Apply(entry);
  return sessions_.at(session_id);
}

std::vector<TurnAnnotation> SessionStore::Annotations() const {
  std::lock_guard lock(mu_);
  std::vector<TurnAnnotation> out;
  for (const auto& [id, s] : sessions_) {
    for (const auto& [turn, a] : s.submitted) out.push_back(a);
  }
  std::sort(out.begin(), out.end(), [](const TurnAnnotation& a, const TurnAnnotation& b) {
    return std::tie(a.dialogue_id, a.annotator_id, a.turn_index) <
           std::tie(b.dialogue_id, b.annotator_id, b.turn_index);
  });
  return out;
}

std::uint64_t SessionStore::revision() const {
  std::lock_guard lock(mu_);
  return revision_;
}

void SessionStore::Compact() {
  std::lock_guard lock(mu_);
  std::string text;
  for (const auto& [id, s] : sessions_) {
    text += json{{"op", "create"},
                 {"session_id", id},
                 {"dialogue_id", s.dialogue_id},
                 {"annotator_id", s.annotator_id},
                 {"at", s.created_at}}
                .dump() +
            "\n";
  }
  std::map<std::string, std::set<int>> audited;
  for (const json& e : audit_) {
    audited[e.at("session_id").get<std::string>()].insert(e.at("turn_index").get<int>());
  }
  for (const auto& [id, s] : sessions_) {
    for (const auto& [turn, a] : s.submitted) {
      json label = {{"op", "label"},
                    {"session_id", id},
                    {"turn_index", turn},
                    {"record", AnnotationToJson(a)},
                    {"at", s.updated_at}};
      if (audited[id].count(turn)) {
        // Corrected turns start from the original label; the audit entries
        // appended below replay the corrections.
        for (const json& e : audit_) {
          if (e.at("session_id") == id && e.at("turn_index") == turn) {
            label["record"] = e.at("previous");
            break;
          }
        }
      }
      text += label.dump() + "\n";
    }
  }
  for (const json& e : audit_) text += e.dump() + "\n";
  internal::WriteAtomic(log_path_, text);
}

}  // namespace cobra
