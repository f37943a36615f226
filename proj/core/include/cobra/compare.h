#ifndef COBRA_COMPARE_H_
#define COBRA_COMPARE_H_

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cobra/agreement.h"
#include "cobra/effect_size.h"
#include "cobra/eval_run.h"
#include "cobra/metrics.h"

namespace cobra {

struct HumanComparison {
  std::string model;
  std::string gold;
  AgreementReport agreement;
  // (model, gold) series per dialogue over the shared turns, by dialogue id.
  std::vector<std::pair<MetricSeries, MetricSeries>> series;
  std::size_t shared_turns = 0;
  // Gold turns the model has no parsed label for (failed or missing).
  std::size_t excluded_turns = 0;
  // Model outcome verdicts scored against gold outcomes; nullopt when gold
  // has a single outcome class.
  std::optional<double> outcome_auc;
};

// Scores both streams over their shared Q/A turns and runs the agreement
// battery with `gold` as reference. Throws kNoOverlap when nothing is shared.
HumanComparison CompareToHuman(const Corpus& corpus,
                               const std::vector<TurnAnnotation>& model,
                               const std::vector<TurnAnnotation>& gold,
                               const WeightConfig& cfg);

// Gold taken from the corpus annotations of `gold_annotator`.
HumanComparison CompareToHuman(const EvalRun& run, const Corpus& corpus,
                               const std::string& gold_annotator,
                               const WeightConfig& cfg);

nlohmann::json HumanComparisonToJson(const HumanComparison& c);

// Agreement values keyed by metric (bat, pat, nrbat, commit, rel, man, qual,
// const) for each (trial, witness side) group.
using GroupScores = std::map<std::string, std::map<std::string, double>>;

// Per-group agreement of `model` with `gold`. Groups where a metric is
// undefined (e.g. a constant series) omit that metric.
GroupScores GroupAgreement(const Corpus& corpus,
                           const std::vector<TurnAnnotation>& model,
                           const std::vector<TurnAnnotation>& gold,
                           const WeightConfig& cfg);

// Paired treatment-vs-control effect sizes across the groups both score, one
// summary per metric, Bonferroni-corrected over the metrics compared.
std::vector<EffectSizeSummary> CompareConditions(const GroupScores& treatment,
                                                 const GroupScores& control,
                                                 const std::vector<std::string>& metrics,
                                                 const EffectSizeOptions& opts = {});

inline const std::vector<std::string>& BatteryMetrics() {
  static const std::vector<std::string> kMetrics = {
      "bat", "pat", "nrbat", "commit", "rel", "man", "qual", "const"};
  return kMetrics;
}

}  // namespace cobra

#endif  // COBRA_COMPARE_H_
