#ifndef COBRA_METRICS_H_
#define COBRA_METRICS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cobra/corpus.h"

namespace cobra {

// The engine's only tunable numerics. Defaults reproduce the published
// weighting (0.4 / 0.4 / 0.2 / 0.2) and commitment values (1, 0.5, -0.5, -1).
struct WeightConfig {
  double w_rel = 0.4;
  double w_man = 0.4;
  double w_qual = 0.2;
  double w_const = 0.2;

  double fc_beneficial = 1.0;
  double fc_neutral = 0.5;
  double fc_none = -0.5;
  double fc_detrimental = -1.0;

  // A relevance / manner rating at or above the threshold is a violation.
  int rel_violation_threshold = 3;
  int man_violation_threshold = 3;

  // Series whose population sigma is at or below this normalize to zeros.
  double sigma_epsilon = 1e-12;

  // Use f_c(C) instead of |f_c(C)| in the detrimental benefit branch, which
  // makes rescued detrimental turns negative. Off by default.
  bool signed_detrimental = false;

  // Human-readable warnings for unusual but legal settings.
  std::vector<std::string> Warnings() const;
  // Throws kSchemaViolation on negative weights or non-positive epsilon.
  void Validate() const;
  // Stable 64-bit FNV-1a over the canonical JSON form.
  std::uint64_t Hash() const;
  std::string HashHex() const;

  nlohmann::json ToJson() const;
  static WeightConfig FromJson(const nlohmann::json& j);
  static WeightConfig Load(const std::string& path);

  friend bool operator==(const WeightConfig&, const WeightConfig&) = default;
};

struct ViolationTerms {
  double rel = 0.0;
  double man = 0.0;
  double qual = 0.0;
  double cons = 0.0;

  // Rel + Man + Qual; consistency enters PaT separately.
  double Multiplier() const { return rel + man + qual; }

  friend bool operator==(const ViolationTerms&, const ViolationTerms&) = default;
};

double CommitmentValue(CommitmentType c, const WeightConfig& cfg);

ViolationTerms ComputeViolationTerms(const MaximRatings& m,
                                     const WeightConfig& cfg);

// Benefit at a single turn.
double BenefitAtTurn(const TurnAnnotation& a, const WeightConfig& cfg);

// Penalty at a single turn. `cum_bat_through_i` must already include the
// benefit of this turn.
double PenaltyAtTurn(const TurnAnnotation& a, double cum_bat_through_i,
                     const WeightConfig& cfg);

// (x - mean) / population sigma; all zeros when sigma <= sigma_epsilon.
// Throws kEmptySeries.
std::vector<double> ZNormalize(std::span<const double> xs,
                               double sigma_epsilon);

// Cumulative (wins_w - wins_q) / (wins_w + wins_q). Throws kEmptySeries.
std::vector<double> NormalizedRelativeAdvantage(std::span<const Outcome> outcomes);

// Z(pat) - Z(bat) elementwise. Throws kEmptySeries or kLengthMismatch.
std::vector<double> NetMoveBenefit(std::span<const double> bat,
                                   std::span<const double> pat,
                                   double sigma_epsilon);

// Inputs to the message-exchange game jury score.
struct MEGameInputs {
  int coh = 1;      // -1 or 1
  int res = 1;      // -1 or 1
  int cons = 1;     // 0 or 1
  double p_good = 1.0;
  int win = 1;      // 0 or 1

  void Validate() const;
};

// (coh + res) * cons * p_good * win.
double MEGameScore(const MEGameInputs& x);

struct MetricSeries {
  std::string dialogue_id;
  std::string annotator_id;
  std::uint64_t config_hash = 0;
  // True for live previews whose NRBaT uses prefix-only statistics.
  bool provisional = false;

  std::vector<int> turn_index;  // stored turn index of each Q/A turn
  std::vector<double> bat;
  std::vector<double> pat;
  std::vector<double> cum_bat;
  std::vector<double> cum_pat;
  std::vector<double> nrbat;
  std::vector<double> net_move_benefit;
  // Present only when every scored turn carries an outcome.
  std::optional<std::vector<double>> nra;

  std::size_t size() const { return bat.size(); }
  bool empty() const { return bat.empty(); }

  friend bool operator==(const MetricSeries&, const MetricSeries&) = default;
};

// Scores an already-aligned annotation sequence (one annotator, one
// dialogue, turn order). No coverage checks. Throws kEmptySeries.
MetricSeries ScoreSequence(std::span<const TurnAnnotation> annotations,
                           const WeightConfig& cfg);

// Scores one annotator's labels on a dialogue. The annotations must cover
// every Q/A turn exactly once; order does not matter. Throws
// kMissingAnnotation, kDuplicateAnnotation, kNotAQaPair or kTurnNotFound.
MetricSeries ScoreDialogue(const Dialogue& dialogue,
                           std::span<const TurnAnnotation> annotations,
                           const WeightConfig& cfg);

// Incremental scorer behind the live annotation preview. BaT and PaT values
// are final as soon as a turn is added; NRBaT and net move benefit are
// standardized over the prefix seen so far and therefore provisional.
class StreamingScorer {
 public:
  StreamingScorer(std::string dialogue_id, std::string annotator_id,
                  WeightConfig cfg);

  void Add(const TurnAnnotation& a);
  std::size_t size() const { return annotations_.size(); }

  // Prefix series, flagged provisional.
  MetricSeries Provisional() const;
  // Same inputs scored in batch mode; identical bat/pat to Provisional().
  MetricSeries Canonical() const;

 private:
  std::string dialogue_id_;
  std::string annotator_id_;
  WeightConfig cfg_;
  std::vector<TurnAnnotation> annotations_;
  std::vector<double> bat_;
  std::vector<double> pat_;
  double cum_bat_ = 0.0;
};

// CSV with columns turn_index,bat,pat,cum_bat,cum_pat,nrbat,
// net_move_benefit,nra. Numbers use the shortest round-trip form.
std::string MetricSeriesToCsv(const MetricSeries& s);
// JSON variant that embeds the weight configuration.
nlohmann::json MetricSeriesToJson(const MetricSeries& s,
                                  const WeightConfig& cfg);

// Shortest decimal string that round-trips to `v`.
std::string FormatDouble(double v);

}  // namespace cobra

#endif  // COBRA_METRICS_H_
