#ifndef COBRA_AGREEMENT_H_
#define COBRA_AGREEMENT_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cobra/corpus.h"
#include "cobra/metrics.h"
#include "cobra/stats.h"

namespace cobra {

// Agreement between one pair of annotation streams.
struct PairAgreement {
  std::string rater_a;
  std::string rater_b;
  std::size_t shared_turns = 0;
  std::map<std::string, std::optional<RankCorrelation>> spearman;  // bat, pat, nrbat
  std::optional<double> commitment_kappa;
  std::optional<double> outcome_kappa;
  // b judged against a as gold; nullopt when a never marked an inconsistency.
  std::optional<double> consistency_tpr;
};

struct AgreementReport {
  std::vector<std::string> raters;
  // Pairwise means; p is the largest pairwise p (conservative).
  std::map<std::string, std::optional<RankCorrelation>> spearman;
  std::optional<double> cohen_kappa_commitment;
  std::map<std::string, std::optional<double>> randolph_kappa;  // rel, man, qual
  double consistency_tpr = 0.0;
  bool consistency_no_positives = true;
  std::optional<double> outcome_kappa;
  // Over items where every rater chose the same outcome.
  std::optional<double> reasons_jaccard;
  std::optional<double> reasons_full_agreement;
  std::size_t n_items = 0;         // turns labelled by every rater
  std::size_t excluded_items = 0;  // turns labelled by some raters only
  std::vector<PairAgreement> pairs;
};

// Named annotation streams over the dialogues of one corpus.
using AnnotationStreams = std::map<std::string, std::vector<TurnAnnotation>>;

struct AgreementOptions {
  // When set, only (gold, other) pairs are compared and the consistency true
  // positive rate is taken with the gold stream as reference. Otherwise all
  // unordered pairs are used and TPR averages both directions.
  std::optional<std::string> gold;
};

// Per pair, each stream is restricted to the Q/A turns both streams labelled
// and scored per dialogue; series are pooled across dialogues before
// correlating. Throws kInsufficientData for fewer than two streams and
// kNoSharedItems when no pair shares a turn.
AgreementReport ComputeAgreement(const Corpus& corpus,
                                 const AnnotationStreams& streams,
                                 const WeightConfig& cfg,
                                 const AgreementOptions& opts = {});

// Streams taken from the corpus annotations of `raters` (all annotators when
// empty).
AgreementReport AgreementAmongRaters(const Corpus& corpus,
                                     const std::vector<std::string>& raters,
                                     const WeightConfig& cfg);

nlohmann::json AgreementToJson(const AgreementReport& r);

}  // namespace cobra

#endif  // COBRA_AGREEMENT_H_
