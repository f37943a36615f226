#include "cobra/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "cobra/error.h"
#include "cobra/hash.h"

namespace cobra {

std::vector<std::string> WeightConfig::Warnings() const {
  std::vector<std::string> out;
  if (w_rel + w_man + w_qual > 1.0 + 1e-12) {
    out.push_back(
        "w_rel + w_man + w_qual exceeds 1; benefit of a rescued detrimental "
        "turn is no longer bounded by |f_c|");
  }
  if (signed_detrimental) {
    out.push_back("signed detrimental branch enabled; BaT may be negative");
  }
  return out;
}

void WeightConfig::Validate() const {
  auto check = [](double w, const char* name) {
    if (!(w >= 0.0)) {
      throw Error(ErrorCode::kSchemaViolation,
                  std::string("weight '") + name + "' must be non-negative",
                  name);
    }
  };
  check(w_rel, "w_rel");
  check(w_man, "w_man");
  check(w_qual, "w_qual");
  check(w_const, "w_const");
  if (!(sigma_epsilon > 0.0)) {
    throw Error(ErrorCode::kSchemaViolation, "sigma_epsilon must be positive",
                "sigma_epsilon");
  }
}

nlohmann::json WeightConfig::ToJson() const {
  return {{"w_rel", w_rel},
          {"w_man", w_man},
          {"w_qual", w_qual},
          {"w_const", w_const},
          {"fc_beneficial", fc_beneficial},
          {"fc_neutral", fc_neutral},
          {"fc_none", fc_none},
          {"fc_detrimental", fc_detrimental},
          {"rel_violation_threshold", rel_violation_threshold},
          {"man_violation_threshold", man_violation_threshold},
          {"sigma_epsilon", sigma_epsilon},
          {"signed_detrimental", signed_detrimental}};
}

WeightConfig WeightConfig::FromJson(const nlohmann::json& j) {
  WeightConfig cfg;
  if (!j.is_object()) {
    throw Error(ErrorCode::kSchemaViolation, "weights must be a JSON object");
  }
  auto read = [&](const char* key, auto& field) {
    if (auto it = j.find(key); it != j.end()) {
      try {
        field = it->get<std::decay_t<decltype(field)>>();
      } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::kSchemaViolation,
                    std::string("weights: field '") + key + "' has wrong type",
                    key);
      }
    }
  };
  read("w_rel", cfg.w_rel);
  read("w_man", cfg.w_man);
  read("w_qual", cfg.w_qual);
  read("w_const", cfg.w_const);
  read("fc_beneficial", cfg.fc_beneficial);
  read("fc_neutral", cfg.fc_neutral);
  read("fc_none", cfg.fc_none);
  read("fc_detrimental", cfg.fc_detrimental);
  read("rel_violation_threshold", cfg.rel_violation_threshold);
  read("man_violation_threshold", cfg.man_violation_threshold);
  read("sigma_epsilon", cfg.sigma_epsilon);
  read("signed_detrimental", cfg.signed_detrimental);
  cfg.Validate();
  return cfg;
}

WeightConfig WeightConfig::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path, path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformedFile, path + ": " + e.what(), path);
  }
  return FromJson(j);
}

std::uint64_t WeightConfig::Hash() const { return Fnv1a(ToJson().dump()); }

std::string WeightConfig::HashHex() const { return HexDigest(Hash()); }

double CommitmentValue(CommitmentType c, const WeightConfig& cfg) {
  switch (c) {
    case CommitmentType::kBeneficial: return cfg.fc_beneficial;
    case CommitmentType::kNeutral: return cfg.fc_neutral;
    case CommitmentType::kNoneMade: return cfg.fc_none;
    case CommitmentType::kDetrimental: return cfg.fc_detrimental;
  }
  return 0.0;
}

ViolationTerms ComputeViolationTerms(const MaximRatings& m,
                                     const WeightConfig& cfg) {
  ViolationTerms t;
  t.rel = m.relevance >= cfg.rel_violation_threshold ? cfg.w_rel : 0.0;
  t.man = m.manner >= cfg.man_violation_threshold ? cfg.w_man : 0.0;
  t.qual = m.quality == 0 ? cfg.w_qual : 0.0;
  t.cons = m.consistency == 1 ? cfg.w_const : 0.0;
  return t;
}

double BenefitAtTurn(const TurnAnnotation& a, const WeightConfig& cfg) {
  const double fc = CommitmentValue(a.commitment, cfg);
  switch (a.commitment) {
    case CommitmentType::kBeneficial:
    case CommitmentType::kNeutral:
      return fc;
    case CommitmentType::kDetrimental: {
      // Indirectly conveyed harm is partly rescued by the violations.
      const double base = cfg.signed_detrimental ? fc : std::fabs(fc);
      return base * ComputeViolationTerms(a.maxims, cfg).Multiplier();
    }
    case CommitmentType::kNoneMade:
      return 0.0;
  }
  return 0.0;
}

double PenaltyAtTurn(const TurnAnnotation& a, double cum_bat_through_i,
                     const WeightConfig& cfg) {
  const double fc = std::fabs(CommitmentValue(a.commitment, cfg));
  const ViolationTerms t = ComputeViolationTerms(a.maxims, cfg);
  const double inconsistency = t.cons * cum_bat_through_i;
  switch (a.commitment) {
    case CommitmentType::kDetrimental:
    case CommitmentType::kNoneMade:
      return fc + inconsistency;
    case CommitmentType::kBeneficial:
    case CommitmentType::kNeutral:
      return fc * t.Multiplier() + inconsistency;
  }
  return 0.0;
}

std::vector<double> ZNormalize(std::span<const double> xs,
                               double sigma_epsilon) {
  if (xs.empty()) {
    throw Error(ErrorCode::kEmptySeries, "cannot z-normalize an empty series");
  }
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sigma = std::sqrt(ss / n);

  std::vector<double> out(xs.size(), 0.0);
  if (sigma <= sigma_epsilon) return out;
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = (xs[i] - mean) / sigma;
  return out;
}

std::vector<double> NormalizedRelativeAdvantage(
    std::span<const Outcome> outcomes) {
  if (outcomes.empty()) {
    throw Error(ErrorCode::kEmptySeries, "NRA needs at least one outcome");
  }
  std::vector<double> out;
  out.reserve(outcomes.size());
  int witness = 0;
  int questioner = 0;
  for (Outcome o : outcomes) {
    (o == Outcome::kWitness ? witness : questioner) += 1;
    out.push_back(static_cast<double>(witness - questioner) /
                  static_cast<double>(witness + questioner));
  }
  return out;
}

std::vector<double> NetMoveBenefit(std::span<const double> bat,
                                   std::span<const double> pat,
                                   double sigma_epsilon) {
  if (bat.size() != pat.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "bat and pat series differ in length");
  }
  const auto zb = ZNormalize(bat, sigma_epsilon);
  const auto zp = ZNormalize(pat, sigma_epsilon);
  std::vector<double> out(zb.size());
  for (std::size_t i = 0; i < zb.size(); ++i) out[i] = zp[i] - zb[i];
  return out;
}

void MEGameInputs::Validate() const {
  auto fail = [](const char* field) {
    throw Error(ErrorCode::kOutOfRange,
                std::string("ME game input '") + field + "' out of range",
                field);
  };
  if (coh != -1 && coh != 1) fail("coh");
  if (res != -1 && res != 1) fail("res");
  if (cons != 0 && cons != 1) fail("cons");
  if (!(p_good >= 0.0 && p_good <= 1.0)) fail("p_good");
  if (win != 0 && win != 1) fail("win");
}

double MEGameScore(const MEGameInputs& x) {
  return static_cast<double>(x.coh + x.res) * x.cons * x.p_good * x.win;
}

MetricSeries ScoreSequence(std::span<const TurnAnnotation> annotations,
                           const WeightConfig& cfg) {
  if (annotations.empty()) {
    throw Error(ErrorCode::kEmptySeries, "no annotations to score");
  }
  MetricSeries s;
  s.dialogue_id = annotations.front().dialogue_id;
  s.annotator_id = annotations.front().annotator_id;
  s.config_hash = cfg.Hash();

  const std::size_t n = annotations.size();
  s.turn_index.reserve(n);
  s.bat.reserve(n);
  s.pat.reserve(n);
  s.cum_bat.reserve(n);
  s.cum_pat.reserve(n);

  double cum_bat = 0.0;
  double cum_pat = 0.0;
  bool all_outcomes = true;
  std::vector<Outcome> outcomes;
  for (const TurnAnnotation& a : annotations) {
    const double b = BenefitAtTurn(a, cfg);
    cum_bat += b;
    const double p = PenaltyAtTurn(a, cum_bat, cfg);
    cum_pat += p;
    s.turn_index.push_back(a.turn_index);
    s.bat.push_back(b);
    s.pat.push_back(p);
    s.cum_bat.push_back(cum_bat);
    s.cum_pat.push_back(cum_pat);
    if (a.outcome) {
      outcomes.push_back(*a.outcome);
    } else {
      all_outcomes = false;
    }
  }

  const auto zb = ZNormalize(s.cum_bat, cfg.sigma_epsilon);
  const auto zp = ZNormalize(s.cum_pat, cfg.sigma_epsilon);
  s.nrbat.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.nrbat[i] = zb[i] - zp[i];
  s.net_move_benefit = NetMoveBenefit(s.bat, s.pat, cfg.sigma_epsilon);
  if (all_outcomes) s.nra = NormalizedRelativeAdvantage(outcomes);
  return s;
}

MetricSeries ScoreDialogue(const Dialogue& dialogue,
                           std::span<const TurnAnnotation> annotations,
                           const WeightConfig& cfg) {
  std::map<int, const TurnAnnotation*> by_turn;
  for (const TurnAnnotation& a : annotations) {
    const Turn* turn = dialogue.FindTurn(a.turn_index);
    if (turn == nullptr) {
      throw Error(ErrorCode::kTurnNotFound,
                  "dialogue '" + dialogue.id + "' has no turn " +
                      std::to_string(a.turn_index),
                  std::to_string(a.turn_index));
    }
    if (!turn->is_qa_pair) {
      throw Error(ErrorCode::kNotAQaPair,
                  "turn " + std::to_string(a.turn_index) + " is not a Q/A pair",
                  std::to_string(a.turn_index));
    }
    if (!by_turn.emplace(a.turn_index, &a).second) {
      throw Error(ErrorCode::kDuplicateAnnotation,
                  "turn " + std::to_string(a.turn_index) +
                      " is annotated more than once",
                  std::to_string(a.turn_index));
    }
  }

  std::vector<TurnAnnotation> ordered;
  for (const Turn& t : dialogue.turns) {
    if (!t.is_qa_pair) continue;
    auto it = by_turn.find(t.index);
    if (it == by_turn.end()) {
      throw Error(ErrorCode::kMissingAnnotation,
                  "dialogue '" + dialogue.id + "' turn " +
                      std::to_string(t.index) + " has no annotation",
                  std::to_string(t.index));
    }
    ordered.push_back(*it->second);
  }
  MetricSeries s = ScoreSequence(ordered, cfg);
  s.dialogue_id = dialogue.id;
  return s;
}

StreamingScorer::StreamingScorer(std::string dialogue_id,
                                 std::string annotator_id, WeightConfig cfg)
    : dialogue_id_(std::move(dialogue_id)),
      annotator_id_(std::move(annotator_id)),
      cfg_(cfg) {}

void StreamingScorer::Add(const TurnAnnotation& a) {
  const double b = BenefitAtTurn(a, cfg_);
  cum_bat_ += b;
  bat_.push_back(b);
  pat_.push_back(PenaltyAtTurn(a, cum_bat_, cfg_));
  annotations_.push_back(a);
}

MetricSeries StreamingScorer::Provisional() const {
  MetricSeries s;
  s.dialogue_id = dialogue_id_;
  s.annotator_id = annotator_id_;
  s.config_hash = cfg_.Hash();
  s.provisional = true;
  if (annotations_.empty()) return s;

  s.bat = bat_;
  s.pat = pat_;
  double cb = 0.0;
  double cp = 0.0;
  bool all_outcomes = true;
  std::vector<Outcome> outcomes;
  for (std::size_t i = 0; i < bat_.size(); ++i) {
    cb += bat_[i];
    cp += pat_[i];
    s.cum_bat.push_back(cb);
    s.cum_pat.push_back(cp);
    s.turn_index.push_back(annotations_[i].turn_index);
    if (annotations_[i].outcome) {
      outcomes.push_back(*annotations_[i].outcome);
    } else {
      all_outcomes = false;
    }
  }
  const auto zb = ZNormalize(s.cum_bat, cfg_.sigma_epsilon);
  const auto zp = ZNormalize(s.cum_pat, cfg_.sigma_epsilon);
  for (std::size_t i = 0; i < zb.size(); ++i) s.nrbat.push_back(zb[i] - zp[i]);
  s.net_move_benefit = NetMoveBenefit(s.bat, s.pat, cfg_.sigma_epsilon);
  if (all_outcomes) s.nra = NormalizedRelativeAdvantage(outcomes);
  return s;
}

MetricSeries StreamingScorer::Canonical() const {
  MetricSeries s = ScoreSequence(annotations_, cfg_);
  s.dialogue_id = dialogue_id_;
  s.annotator_id = annotator_id_;
  return s;
}

}  // namespace cobra
