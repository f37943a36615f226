#include "cobra/corpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <tuple>

#include "cobra/error.h"

namespace cobra {
namespace {

using nlohmann::json;

std::string Lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

[[noreturn]] void SchemaError(std::string_view record, std::string_view field,
                              std::string_view why) {
  throw Error(ErrorCode::kSchemaViolation,
              std::string(record) + ": field '" + std::string(field) + "' " +
                  std::string(why),
              std::string(field));
}

const json& Require(const json& obj, std::string_view record,
                    const char* field) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) SchemaError(record, field, "is missing");
  return *it;
}

std::string RequireString(const json& obj, std::string_view record,
                          const char* field) {
  const json& v = Require(obj, record, field);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  SchemaError(record, field, "must be a string");
}

int RequireInt(const json& obj, std::string_view record, const char* field) {
  const json& v = Require(obj, record, field);
  if (!v.is_number_integer()) SchemaError(record, field, "must be an integer");
  return v.get<int>();
}

std::optional<std::string> OptionalString(const json& obj,
                                          std::string_view record,
                                          const char* field) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) SchemaError(record, field, "must be a string");
  return it->get<std::string>();
}

Side RequireSide(const json& obj, std::string_view record, const char* field) {
  auto side = ParseSide(RequireString(obj, record, field));
  if (!side) SchemaError(record, field, "must be Prosecution or Defense");
  return *side;
}

std::string DefaultDialogueId(const Dialogue& d) {
  return d.trial_id + "/" + d.witness_id + "/" +
         Lower(ExamTypeName(d.exam_type));
}

Dialogue DialogueFromJson(const json& j, std::size_t position) {
  const std::string record = "dialogues[" + std::to_string(position) + "]";
  if (!j.is_object()) SchemaError(record, "dialogue", "must be an object");
  Dialogue d;
  d.trial_id = RequireString(j, record, "trial_id");
  d.witness_id = RequireString(j, record, "witness_id");
  d.witness_side = RequireSide(j, record, "witness_side");
  auto exam = ParseExamType(RequireString(j, record, "exam_type"));
  if (!exam) SchemaError(record, "exam_type", "must be Cross or Direct");
  d.exam_type = *exam;
  d.id = OptionalString(j, record, "id").value_or(DefaultDialogueId(d));

  const json& turns = Require(j, record, "turns");
  if (!turns.is_array()) SchemaError(record, "turns", "must be an array");
  for (std::size_t t = 0; t < turns.size(); ++t) {
    const std::string trec = record + ".turns[" + std::to_string(t) + "]";
    const json& tj = turns[t];
    if (!tj.is_object()) SchemaError(trec, "turn", "must be an object");
    Turn turn;
    turn.index = RequireInt(tj, trec, "index");
    if (turn.index != static_cast<int>(t) + 1) {
      SchemaError(trec, "index", "must be consecutive starting at 1");
    }
    turn.source_index = turn.index;
    turn.question = RequireString(tj, trec, "question");
    turn.answer = RequireString(tj, trec, "answer");
    turn.questioner_role = RequireSide(tj, trec, "questioner_role");
    const json& qa = Require(tj, trec, "is_qa_pair");
    if (!qa.is_boolean()) SchemaError(trec, "is_qa_pair", "must be a boolean");
    turn.is_qa_pair = qa.get<bool>();
    turn.background = OptionalString(tj, trec, "background");
    d.turns.push_back(std::move(turn));
  }
  return d;
}

json DialogueToJson(const Dialogue& d) {
  json turns = json::array();
  for (const Turn& t : d.turns) {
    json tj = {{"index", t.index},
               {"question", t.question},
               {"answer", t.answer},
               {"questioner_role", SideName(t.questioner_role)},
               {"is_qa_pair", t.is_qa_pair}};
    if (t.background) tj["background"] = *t.background;
    turns.push_back(std::move(tj));
  }
  return {{"id", d.id},
          {"trial_id", d.trial_id},
          {"witness_id", d.witness_id},
          {"witness_side", SideName(d.witness_side)},
          {"exam_type", ExamTypeName(d.exam_type)},
          {"turns", std::move(turns)}};
}

}  // namespace

std::string_view SideName(Side side) {
  return side == Side::kProsecution ? "Prosecution" : "Defense";
}

std::string_view ExamTypeName(ExamType type) {
  return type == ExamType::kCross ? "Cross" : "Direct";
}

std::string_view CommitmentName(CommitmentType c) {
  switch (c) {
    case CommitmentType::kDetrimental: return "Detrimental";
    case CommitmentType::kBeneficial: return "Beneficial";
    case CommitmentType::kNeutral: return "Neutral";
    case CommitmentType::kNoneMade: return "NoneMade";
  }
  return "?";
}

std::string_view OutcomeName(Outcome o) {
  return o == Outcome::kWitness ? "Witness" : "Questioner";
}

std::string_view ReasonName(Reason r) {
  switch (r) {
    case Reason::kLogical: return "Logical";
    case Reason::kCredibility: return "Credibility";
    case Reason::kEmotional: return "Emotional";
  }
  return "?";
}

std::optional<Side> ParseSide(std::string_view text) {
  const std::string s = Lower(text);
  if (s == "prosecution") return Side::kProsecution;
  if (s == "defense" || s == "defence") return Side::kDefense;
  return std::nullopt;
}

std::optional<ExamType> ParseExamType(std::string_view text) {
  const std::string s = Lower(text);
  if (s == "cross") return ExamType::kCross;
  if (s == "direct") return ExamType::kDirect;
  return std::nullopt;
}

std::optional<CommitmentType> CommitmentFromCode(int code) {
  if (code < 1 || code > 4) return std::nullopt;
  return static_cast<CommitmentType>(code);
}

std::optional<Outcome> ParseOutcome(std::string_view text) {
  const std::string s = Lower(text);
  if (s == "witness") return Outcome::kWitness;
  if (s == "questioner") return Outcome::kQuestioner;
  return std::nullopt;
}

std::optional<Reason> ReasonFromCode(int code) {
  if (code < 1 || code > 3) return std::nullopt;
  return static_cast<Reason>(code);
}

const Turn* Dialogue::FindTurn(int index) const {
  if (index >= 1 && static_cast<std::size_t>(index) <= turns.size() &&
      turns[index - 1].index == index) {
    return &turns[index - 1];
  }
  for (const Turn& t : turns) {
    if (t.index == index) return &t;
  }
  return nullptr;
}

const Dialogue* Corpus::FindDialogue(std::string_view id) const {
  for (const Dialogue& d : dialogues) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

std::vector<std::string> Corpus::Annotators() const {
  std::set<std::string> names;
  for (const auto& a : annotations) names.insert(a.annotator_id);
  return {names.begin(), names.end()};
}

std::vector<TurnAnnotation> Corpus::AnnotationsFor(
    std::string_view dialogue_id, std::string_view annotator) const {
  std::vector<TurnAnnotation> out;
  for (const auto& a : annotations) {
    if (a.dialogue_id == dialogue_id && a.annotator_id == annotator) {
      out.push_back(a);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return x.turn_index < y.turn_index;
  });
  return out;
}

TableMapping TableMapping::FromJson(const json& j) {
  TableMapping m;
  if (auto it = j.find("columns"); it != j.end()) {
    for (const auto& [key, value] : it->items()) {
      m.columns[key] = value.get<std::string>();
    }
  }
  if (auto it = j.find("delimiter"); it != j.end()) {
    const auto s = it->get<std::string>();
    m.delimiter = s == "\\t" ? '\t' : s.at(0);
  }
  if (auto it = j.find("reasons_separator"); it != j.end()) {
    m.reasons_separator = it->get<std::string>().at(0);
  }
  return m;
}

json AnnotationToJson(const TurnAnnotation& a) {
  json reasons = json::array();
  for (Reason r : a.reasons) reasons.push_back(static_cast<int>(r));
  json j = {{"dialogue_ref", a.dialogue_id},
            {"annotator_id", a.annotator_id},
            {"turn_index", a.turn_index},
            {"commitment", static_cast<int>(a.commitment)},
            {"relevance", a.maxims.relevance},
            {"manner", a.maxims.manner},
            {"quality", a.maxims.quality},
            {"consistency", a.maxims.consistency},
            {"outcome", a.outcome ? json(OutcomeName(*a.outcome)) : json()},
            {"reasons", std::move(reasons)}};
  if (a.raw_source) j["raw_source"] = *a.raw_source;
  return j;
}

TurnAnnotation AnnotationFromJson(const json& j, std::string_view record) {
  if (!j.is_object()) SchemaError(record, "annotation", "must be an object");
  TurnAnnotation a;
  a.dialogue_id = RequireString(j, record, "dialogue_ref");
  a.annotator_id = RequireString(j, record, "annotator_id");
  a.turn_index = RequireInt(j, record, "turn_index");
  const int code = RequireInt(j, record, "commitment");
  auto c = CommitmentFromCode(code);
  if (!c) SchemaError(record, "commitment", "must be in 1..4");
  a.commitment = *c;
  a.maxims.relevance = RequireInt(j, record, "relevance");
  a.maxims.manner = RequireInt(j, record, "manner");
  a.maxims.quality = RequireInt(j, record, "quality");
  a.maxims.consistency = RequireInt(j, record, "consistency");
  if (auto it = j.find("outcome"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) SchemaError(record, "outcome", "must be a string");
    auto o = ParseOutcome(it->get<std::string>());
    if (!o) SchemaError(record, "outcome", "must be Witness or Questioner");
    a.outcome = *o;
  }
  if (auto it = j.find("reasons"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) SchemaError(record, "reasons", "must be an array");
    for (const json& r : *it) {
      if (!r.is_number_integer()) SchemaError(record, "reasons", "must hold integers");
      auto reason = ReasonFromCode(r.get<int>());
      if (!reason) SchemaError(record, "reasons", "codes must be in 1..3");
      a.reasons.insert(*reason);
    }
  }
  a.raw_source = OptionalString(j, record, "raw_source");
  CheckAnnotationFields(a);
  return a;
}

void CheckAnnotationFields(const TurnAnnotation& a) {
  const std::string record = a.dialogue_id + "/" + a.annotator_id + "/turn " +
                             std::to_string(a.turn_index);
  const int code = static_cast<int>(a.commitment);
  if (code < 1 || code > 4) SchemaError(record, "commitment", "must be in 1..4");
  if (a.maxims.relevance < 1 || a.maxims.relevance > 4) {
    SchemaError(record, "relevance", "must be in 1..4");
  }
  if (a.maxims.manner < 1 || a.maxims.manner > 4) {
    SchemaError(record, "manner", "must be in 1..4");
  }
  if (a.maxims.quality != 0 && a.maxims.quality != 1) {
    SchemaError(record, "quality", "must be 0 or 1");
  }
  if (a.maxims.consistency != 0 && a.maxims.consistency != 1) {
    SchemaError(record, "consistency", "must be 0 or 1");
  }
  if (a.turn_index < 1) SchemaError(record, "turn_index", "must be >= 1");
  if (a.outcome && a.reasons.empty()) {
    SchemaError(record, "reasons", "must be non-empty when outcome is set");
  }
}

TurnAnnotation ValidateAnnotation(const TurnAnnotation& record,
                                  const Dialogue& against) {
  CheckAnnotationFields(record);
  const Turn* turn = against.FindTurn(record.turn_index);
  if (turn == nullptr) {
    throw Error(ErrorCode::kTurnNotFound,
                "dialogue '" + against.id + "' has no turn " +
                    std::to_string(record.turn_index),
                std::to_string(record.turn_index));
  }
  if (!turn->is_qa_pair) {
    throw Error(ErrorCode::kNotAQaPair,
                "turn " + std::to_string(record.turn_index) + " of '" +
                    against.id + "' is not a Q/A pair",
                std::to_string(record.turn_index));
  }
  TurnAnnotation out = record;
  out.dialogue_id = against.id;
  return out;
}

std::vector<Turn> ExtractQaPairs(const Dialogue& dialogue) {
  std::vector<Turn> out;
  for (const Turn& t : dialogue.turns) {
    if (!t.is_qa_pair) continue;
    Turn copy = t;
    copy.index = static_cast<int>(out.size()) + 1;
    out.push_back(std::move(copy));
  }
  return out;
}

void FinalizeCorpus(Corpus& corpus) {
  std::set<std::string> ids;
  for (const Dialogue& d : corpus.dialogues) {
    if (!ids.insert(d.id).second) {
      SchemaError("dialogue '" + d.id + "'", "id", "is duplicated");
    }
  }
  for (TurnAnnotation& a : corpus.annotations) {
    const Dialogue* d = corpus.FindDialogue(a.dialogue_id);
    if (d == nullptr) {
      throw Error(ErrorCode::kDanglingAnnotation,
                  "annotation by '" + a.annotator_id +
                      "' references unknown dialogue '" + a.dialogue_id + "'",
                  a.dialogue_id);
    }
    try {
      a = ValidateAnnotation(a, *d);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kSchemaViolation) throw;
      throw Error(ErrorCode::kDanglingAnnotation,
                  "annotation by '" + a.annotator_id + "': " + e.what(),
                  e.detail());
    }
  }
  auto key = [](const TurnAnnotation& a) {
    return std::tie(a.dialogue_id, a.annotator_id, a.turn_index);
  };
  std::stable_sort(corpus.annotations.begin(), corpus.annotations.end(),
                   [&](const auto& x, const auto& y) { return key(x) < key(y); });
  for (std::size_t i = 1; i < corpus.annotations.size(); ++i) {
    if (key(corpus.annotations[i - 1]) == key(corpus.annotations[i])) {
      const auto& a = corpus.annotations[i];
      throw Error(ErrorCode::kSchemaViolation,
                  "duplicate annotation for " + a.dialogue_id + "/" +
                      a.annotator_id + "/turn " + std::to_string(a.turn_index),
                  "turn_index");
    }
  }
}

Corpus CorpusFromJson(const json& doc) {
  if (!doc.is_object()) {
    throw Error(ErrorCode::kMalformedFile, "corpus document must be an object");
  }
  Corpus corpus;
  if (auto it = doc.find("dialogues"); it != doc.end()) {
    if (!it->is_array()) SchemaError("corpus", "dialogues", "must be an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      corpus.dialogues.push_back(DialogueFromJson((*it)[i], i));
    }
  }
  if (auto it = doc.find("annotations"); it != doc.end()) {
    if (!it->is_array()) SchemaError("corpus", "annotations", "must be an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      corpus.annotations.push_back(AnnotationFromJson(
          (*it)[i], "annotations[" + std::to_string(i) + "]"));
    }
  }
  if (auto it = doc.find("metadata"); it != doc.end() && !it->is_null()) {
    if (!it->is_object()) SchemaError("corpus", "metadata", "must be an object");
    corpus.metadata = *it;
  }
  FinalizeCorpus(corpus);
  return corpus;
}

json CorpusToJson(const Corpus& corpus) {
  json dialogues = json::array();
  for (const Dialogue& d : corpus.dialogues) dialogues.push_back(DialogueToJson(d));
  json annotations = json::array();
  for (const auto& a : corpus.annotations) annotations.push_back(AnnotationToJson(a));
  return {{"dialogues", std::move(dialogues)},
          {"annotations", std::move(annotations)},
          {"metadata", corpus.metadata}};
}

void SaveCorpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << CorpusToJson(corpus).dump(2) << '\n';
}

Corpus LoadCorpus(const std::filesystem::path& path,
                  const std::optional<TableMapping>& mapping) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open " + path.string(),
                path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  const auto first = text.find_first_not_of(" \t\r\n");
  const bool looks_json = first != std::string::npos && text[first] == '{';
  if (mapping || !looks_json) {
    return CorpusFromTable(text, mapping.value_or(TableMapping{}));
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedFile,
                path.string() + ": " + e.what(), path.string());
  }
  return CorpusFromJson(doc);
}

}  // namespace cobra
