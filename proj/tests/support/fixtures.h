#ifndef COBRA_TESTS_FIXTURES_H_
#define COBRA_TESTS_FIXTURES_H_

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cobra/corpus.h"

namespace fixtures {

inline std::filesystem::path DataDir() { return COBRA_TEST_DATA_DIR; }

inline std::filesystem::path TempDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("cobra-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline cobra::TurnAnnotation Label(std::string dialogue, std::string annotator, int turn,
                                   cobra::CommitmentType c, int rel = 1, int man = 1,
                                   int qual = 1, int cons = 0,
                                   std::optional<cobra::Outcome> outcome = cobra::Outcome::kWitness,
                                   std::set<cobra::Reason> reasons = {cobra::Reason::kLogical}) {
  cobra::TurnAnnotation a;
  a.dialogue_id = std::move(dialogue);
  a.annotator_id = std::move(annotator);
  a.turn_index = turn;
  a.commitment = c;
  a.maxims = {rel, man, qual, cons};
  a.outcome = outcome;
  a.reasons = outcome ? std::move(reasons) : std::set<cobra::Reason>{};
  return a;
}

inline cobra::Dialogue MakeDialogue(std::string id, int n_turns,
                                    std::vector<int> objections = {}) {
  cobra::Dialogue d;
  d.id = std::move(id);
  d.trial_id = "trial-" + d.id;
  d.witness_id = "w-" + d.id;
  d.witness_side = cobra::Side::kDefense;
  d.exam_type = cobra::ExamType::kCross;
  for (int i = 1; i <= n_turns; ++i) {
    cobra::Turn t;
    t.index = i;
    t.source_index = i;
    t.question = "Question " + std::to_string(i) + " in " + d.id + "?";
    t.answer = "Answer " + std::to_string(i) + ".";
    t.questioner_role = cobra::Side::kProsecution;
    t.is_qa_pair = std::find(objections.begin(), objections.end(), i) == objections.end();
    d.turns.push_back(t);
  }
  return d;
}

// The four labels of the worked example: Beneficial clean, Neutral clean,
// Detrimental with manner 3, NoneMade.
inline std::vector<cobra::TurnAnnotation> FourTurnLabels(const std::string& dialogue,
                                                         const std::string& annotator) {
  using C = cobra::CommitmentType;
  using cobra::Outcome;
  return {Label(dialogue, annotator, 1, C::kBeneficial),
          Label(dialogue, annotator, 2, C::kNeutral),
          Label(dialogue, annotator, 3, C::kDetrimental, 1, 3, 1, 0, Outcome::kQuestioner),
          Label(dialogue, annotator, 4, C::kNoneMade)};
}

inline cobra::TurnAnnotation RandomLabel(std::mt19937_64& rng, const std::string& dialogue,
                                         const std::string& annotator, int turn,
                                         bool with_outcome = true) {
  std::uniform_int_distribution<int> c(1, 4), r(1, 4), b(0, 1);
  auto a = Label(dialogue, annotator, turn, static_cast<cobra::CommitmentType>(c(rng)), r(rng),
                 r(rng), b(rng), b(rng), std::nullopt);
  if (with_outcome) {
    a.outcome = b(rng) ? cobra::Outcome::kWitness : cobra::Outcome::kQuestioner;
    a.reasons = {static_cast<cobra::Reason>(std::uniform_int_distribution<int>(1, 3)(rng))};
  }
  return a;
}

// Corpus of `n_dialogues` with `annotators` labelling every Q/A turn.
inline cobra::Corpus RandomCorpus(std::uint64_t seed, int n_dialogues, int max_turns,
                                  const std::vector<std::string>& annotators) {
  std::mt19937_64 rng(seed);
  cobra::Corpus corpus;
  for (int i = 0; i < n_dialogues; ++i) {
    const int n = std::uniform_int_distribution<int>(3, max_turns)(rng);
    std::string id = "d" + std::to_string(100 + i);
    cobra::Dialogue d = MakeDialogue(id, n);
    d.trial_id = "trial-" + std::to_string(i % 3);
    d.witness_side = i % 2 ? cobra::Side::kDefense : cobra::Side::kProsecution;
    for (const auto& who : annotators) {
      for (int t = 1; t <= n; ++t) corpus.annotations.push_back(RandomLabel(rng, id, who, t));
    }
    corpus.dialogues.push_back(std::move(d));
  }
  cobra::FinalizeCorpus(corpus);
  return corpus;
}

}  // namespace fixtures

#endif  // COBRA_TESTS_FIXTURES_H_
