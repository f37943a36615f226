// Delimited-table ingestion. One row per (turn, annotator); rows without an
// annotator carry only the turn.

#include <algorithm>
#include <charconv>
#include <map>
#include <string>
#include <vector>

#include "cobra/corpus.h"
#include "cobra/error.h"

namespace cobra {
namespace {

using Row = std::vector<std::string>;

// RFC 4180 style: quoted fields may contain the delimiter, newlines and
// doubled quotes.
std::vector<Row> SplitRecords(std::string_view text, char delim) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      any = true;
    } else if (c == delim) {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field.push_back(c);
      any = true;
    }
  }
  if (quoted) {
    throw Error(ErrorCode::kMalformedFile, "unterminated quoted field");
  }
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

class RowView {
 public:
  RowView(const std::map<std::string, std::size_t>& index, const Row& row,
          std::size_t line)
      : index_(index), row_(row), record_("row " + std::to_string(line)) {}

  const std::string& record() const { return record_; }

  std::optional<std::string> Get(const std::string& field) const {
    auto it = index_.find(field);
    if (it == index_.end() || it->second >= row_.size()) return std::nullopt;
    const std::string& v = row_[it->second];
    if (v.empty()) return std::nullopt;
    return v;
  }

  std::string Require(const std::string& field) const {
    auto v = Get(field);
    if (!v) Fail(field, "is missing");
    return *v;
  }

  int RequireInt(const std::string& field) const {
    const std::string v = Require(field);
    int out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      Fail(field, "must be an integer");
    }
    return out;
  }

  [[noreturn]] void Fail(const std::string& field, const std::string& why) const {
    throw Error(ErrorCode::kSchemaViolation,
                record_ + ": field '" + field + "' " + why, field);
  }

 private:
  const std::map<std::string, std::size_t>& index_;
  const Row& row_;
  std::string record_;
};

bool ParseBool(const RowView& row, const std::string& field) {
  auto v = row.Get(field);
  if (!v) return true;
  std::string s = *v;
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (s == "1" || s == "true" || s == "yes" || s == "y") return true;
  if (s == "0" || s == "false" || s == "no" || s == "n") return false;
  row.Fail(field, "must be a boolean");
}

}  // namespace

Corpus CorpusFromTable(std::string_view text, const TableMapping& mapping) {
  std::vector<Row> rows = SplitRecords(text, mapping.delimiter);
  Corpus corpus;
  if (rows.empty()) return corpus;

  std::map<std::string, std::size_t> header;
  for (std::size_t i = 0; i < rows[0].size(); ++i) header[rows[0][i]] = i;

  // canonical field -> column position
  static const char* kFields[] = {
      "dialogue_id", "trial_id",    "witness_id",      "witness_side",
      "exam_type",   "turn_index",  "question",        "answer",
      "questioner_role", "is_qa_pair", "background",   "annotator_id",
      "commitment",  "relevance",   "manner",          "quality",
      "consistency", "outcome",     "reasons",         "raw_source"};
  std::map<std::string, std::size_t> index;
  for (const char* field : kFields) {
    auto m = mapping.columns.find(field);
    const std::string column = m != mapping.columns.end() ? m->second : field;
    if (auto h = header.find(column); h != header.end()) index[field] = h->second;
  }

  std::vector<std::string> order;
  std::map<std::string, Dialogue> dialogues;
  std::map<std::string, std::map<int, Turn>> turns;

  for (std::size_t r = 1; r < rows.size(); ++r) {
    RowView row(index, rows[r], r + 1);
    Dialogue head;
    head.trial_id = row.Require("trial_id");
    head.witness_id = row.Require("witness_id");
    auto side = ParseSide(row.Require("witness_side"));
    if (!side) row.Fail("witness_side", "must be Prosecution or Defense");
    head.witness_side = *side;
    auto exam = ParseExamType(row.Get("exam_type").value_or("Cross"));
    if (!exam) row.Fail("exam_type", "must be Cross or Direct");
    head.exam_type = *exam;
    head.id = row.Get("dialogue_id").value_or(
        head.trial_id + "/" + head.witness_id + "/" +
        (head.exam_type == ExamType::kCross ? "cross" : "direct"));

    auto [dit, inserted] = dialogues.emplace(head.id, head);
    if (inserted) {
      order.push_back(head.id);
    } else if (dit->second.trial_id != head.trial_id ||
               dit->second.witness_side != head.witness_side ||
               dit->second.exam_type != head.exam_type) {
      row.Fail("dialogue_id", "disagrees with an earlier row of the dialogue");
    }

    const int turn_index = row.RequireInt("turn_index");
    auto& dturns = turns[head.id];
    if (!dturns.count(turn_index)) {
      Turn t;
      t.index = turn_index;
      t.source_index = turn_index;
      t.question = row.Get("question").value_or("");
      t.answer = row.Get("answer").value_or("");
      auto role = ParseSide(row.Get("questioner_role").value_or(
          head.witness_side == Side::kDefense ? "Prosecution" : "Defense"));
      if (!role) row.Fail("questioner_role", "must be Prosecution or Defense");
      t.questioner_role = *role;
      t.is_qa_pair = ParseBool(row, "is_qa_pair");
      t.background = row.Get("background");
      dturns.emplace(turn_index, std::move(t));
    }

    auto annotator = row.Get("annotator_id");
    if (!annotator) continue;
    TurnAnnotation a;
    a.dialogue_id = head.id;
    a.annotator_id = *annotator;
    a.turn_index = turn_index;
    const int code = row.RequireInt("commitment");
    auto c = CommitmentFromCode(code);
    if (!c) row.Fail("commitment", "must be in 1..4");
    a.commitment = *c;
    a.maxims.relevance = row.RequireInt("relevance");
    if (a.maxims.relevance < 1 || a.maxims.relevance > 4) {
      row.Fail("relevance", "must be in 1..4");
    }
    a.maxims.manner = row.RequireInt("manner");
    if (a.maxims.manner < 1 || a.maxims.manner > 4) {
      row.Fail("manner", "must be in 1..4");
    }
    a.maxims.quality = row.RequireInt("quality");
    if (a.maxims.quality != 0 && a.maxims.quality != 1) {
      row.Fail("quality", "must be 0 or 1");
    }
    a.maxims.consistency = row.RequireInt("consistency");
    if (a.maxims.consistency != 0 && a.maxims.consistency != 1) {
      row.Fail("consistency", "must be 0 or 1");
    }
    if (auto o = row.Get("outcome")) {
      auto outcome = ParseOutcome(*o);
      if (!outcome) row.Fail("outcome", "must be Witness or Questioner");
      a.outcome = *outcome;
    }
    if (auto rs = row.Get("reasons")) {
      std::size_t start = 0;
      while (start <= rs->size()) {
        auto end = rs->find(mapping.reasons_separator, start);
        if (end == std::string::npos) end = rs->size();
        std::string token = rs->substr(start, end - start);
        token.erase(0, token.find_first_not_of(' '));
        token.erase(token.find_last_not_of(' ') + 1);
        if (!token.empty()) {
          int v = 0;
          auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
          auto reason = ReasonFromCode(v);
          if (ec != std::errc() || ptr != token.data() + token.size() || !reason) {
            row.Fail("reasons", "codes must be in 1..3");
          }
          a.reasons.insert(*reason);
        }
        start = end + 1;
      }
    }
    a.raw_source = row.Get("raw_source");
    CheckAnnotationFields(a);
    corpus.annotations.push_back(std::move(a));
  }

  for (const std::string& id : order) {
    Dialogue d = dialogues.at(id);
    int expected = 1;
    for (auto& [idx, t] : turns[id]) {
      if (idx != expected++) {
        throw Error(ErrorCode::kSchemaViolation,
                    "dialogue '" + id + "': turn indices must be consecutive "
                    "starting at 1",
                    "turn_index");
      }
      d.turns.push_back(t);
    }
    corpus.dialogues.push_back(std::move(d));
  }
  FinalizeCorpus(corpus);
  return corpus;
}

}  // namespace cobra
