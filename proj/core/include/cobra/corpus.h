#ifndef COBRA_CORPUS_H_
#define COBRA_CORPUS_H_

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace cobra {

enum class Side { kProsecution, kDefense };
enum class ExamType { kCross, kDirect };

// Numeric codes match the annotation form and the model prompt.
enum class CommitmentType {
  kDetrimental = 1,
  kBeneficial = 2,
  kNeutral = 3,
  kNoneMade = 4,
};

enum class Outcome { kWitness, kQuestioner };

enum class Reason { kLogical = 1, kCredibility = 2, kEmotional = 3 };

std::string_view SideName(Side side);
std::string_view ExamTypeName(ExamType type);
std::string_view CommitmentName(CommitmentType c);
std::string_view OutcomeName(Outcome o);
std::string_view ReasonName(Reason r);

std::optional<Side> ParseSide(std::string_view text);
std::optional<ExamType> ParseExamType(std::string_view text);
std::optional<CommitmentType> CommitmentFromCode(int code);
std::optional<Outcome> ParseOutcome(std::string_view text);
std::optional<Reason> ReasonFromCode(int code);

struct Turn {
  int index = 0;  // 1-based position inside the dialogue
  // Index in the stored dialogue. Equal to `index` for loaded turns; kept
  // when a view re-indexes the Q/A subset.
  int source_index = 0;
  std::string question;
  std::string answer;
  Side questioner_role = Side::kProsecution;
  bool is_qa_pair = true;
  std::optional<std::string> background;

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Dialogue {
  std::string id;
  std::string trial_id;
  std::string witness_id;
  Side witness_side = Side::kDefense;
  ExamType exam_type = ExamType::kCross;
  std::vector<Turn> turns;

  const Turn* FindTurn(int index) const;

  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

// Ratings as collected: relevance and manner on 1..4 (4 = worst), quality
// 1 = truthful, consistency 1 = inconsistent.
struct MaximRatings {
  int relevance = 1;
  int manner = 1;
  int quality = 1;
  int consistency = 0;

  friend bool operator==(const MaximRatings&, const MaximRatings&) = default;
};

struct TurnAnnotation {
  std::string dialogue_id;
  std::string annotator_id;
  int turn_index = 0;
  CommitmentType commitment = CommitmentType::kNeutral;
  MaximRatings maxims;
  std::optional<Outcome> outcome;
  std::set<Reason> reasons;
  std::optional<std::string> raw_source;

  friend bool operator==(const TurnAnnotation&, const TurnAnnotation&) = default;
};

struct Corpus {
  std::vector<Dialogue> dialogues;
  // Sorted by (dialogue_id, annotator_id, turn_index).
  std::vector<TurnAnnotation> annotations;
  nlohmann::json metadata = nlohmann::json::object();

  const Dialogue* FindDialogue(std::string_view id) const;
  // All annotators that labelled at least one turn, sorted.
  std::vector<std::string> Annotators() const;
  // Annotations of one annotator on one dialogue, ordered by turn.
  std::vector<TurnAnnotation> AnnotationsFor(std::string_view dialogue_id,
                                             std::string_view annotator) const;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Column mapping for delimited tables. Keys are canonical field names
// (dialogue_id, trial_id, witness_id, witness_side, exam_type, turn_index,
// question, answer, questioner_role, is_qa_pair, background, annotator_id,
// commitment, relevance, manner, quality, consistency, outcome, reasons,
// raw_source); values are column headers in the file. Unmapped canonical
// fields are looked up under their own name.
struct TableMapping {
  std::map<std::string, std::string> columns;
  char delimiter = ',';
  // Separator between codes inside the reasons cell.
  char reasons_separator = ';';

  static TableMapping FromJson(const nlohmann::json& j);
};

// Loads a canonical JSON corpus, or a delimited table when `mapping` is given
// or the file does not look like JSON. Throws cobra::Error with kMalformedFile,
// kSchemaViolation or kDanglingAnnotation.
Corpus LoadCorpus(const std::filesystem::path& path,
                  const std::optional<TableMapping>& mapping = std::nullopt);

Corpus CorpusFromJson(const nlohmann::json& doc);
Corpus CorpusFromTable(std::string_view text, const TableMapping& mapping);
nlohmann::json CorpusToJson(const Corpus& corpus);
void SaveCorpus(const Corpus& corpus, const std::filesystem::path& path);

nlohmann::json AnnotationToJson(const TurnAnnotation& a);
TurnAnnotation AnnotationFromJson(const nlohmann::json& j,
                                  std::string_view record_name);

// Q/A turns only, in order, re-indexed 1..n with source_index preserved.
std::vector<Turn> ExtractQaPairs(const Dialogue& dialogue);

// Range checks for the label fields alone; throws kSchemaViolation naming the
// first offending field.
void CheckAnnotationFields(const TurnAnnotation& record);

// Range checks plus a lookup of the referenced turn. Throws kSchemaViolation,
// kTurnNotFound or kNotAQaPair.
TurnAnnotation ValidateAnnotation(const TurnAnnotation& record,
                                  const Dialogue& against);

// Sorts annotations into canonical order and enforces corpus-wide invariants:
// every annotation references a Q/A turn and keys are unique.
void FinalizeCorpus(Corpus& corpus);

}  // namespace cobra

#endif  // COBRA_CORPUS_H_
