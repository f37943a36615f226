#include "cobra/compare.h"

#include <algorithm>
#include <set>

#include "cobra/error.h"
#include "cobra/stats.h"

namespace cobra {
namespace {

using TurnKey = std::pair<std::string, int>;

std::map<TurnKey, const TurnAnnotation*> Index(const std::vector<TurnAnnotation>& xs) {
  std::map<TurnKey, const TurnAnnotation*> out;
  for (const auto& a : xs) out[{a.dialogue_id, a.turn_index}] = &a;
  return out;
}

std::string StreamName(const std::vector<TurnAnnotation>& xs, const char* fallback) {
  return xs.empty() || xs.front().annotator_id.empty() ? fallback
                                                       : xs.front().annotator_id;
}

std::vector<TurnAnnotation> Restrict(const std::vector<TurnAnnotation>& xs,
                                     const std::set<std::string>& dialogues) {
  std::vector<TurnAnnotation> out;
  for (const auto& a : xs) {
    if (dialogues.count(a.dialogue_id)) out.push_back(a);
  }
  return out;
}

}  // namespace

HumanComparison CompareToHuman(const Corpus& corpus,
                               const std::vector<TurnAnnotation>& model,
                               const std::vector<TurnAnnotation>& gold,
                               const WeightConfig& cfg) {
  HumanComparison out;
  out.model = StreamName(model, "model");
  out.gold = StreamName(gold, "gold");
  if (out.model == out.gold) out.model += "#model";

  const auto model_index = Index(model);
  const auto gold_index = Index(gold);
  // Shared Q/A turns, grouped per dialogue in turn order.
  std::map<std::string, std::vector<std::pair<TurnAnnotation, TurnAnnotation>>> shared;
  for (const auto& [key, g] : gold_index) {
    const Dialogue* d = corpus.FindDialogue(key.first);
    const Turn* t = d ? d->FindTurn(key.second) : nullptr;
    if (t == nullptr || !t->is_qa_pair) continue;
    auto it = model_index.find(key);
    if (it == model_index.end()) {
      ++out.excluded_turns;
      continue;
    }
    TurnAnnotation m = *it->second;
    m.annotator_id = out.model;
    TurnAnnotation gg = *g;
    gg.annotator_id = out.gold;
    shared[key.first].emplace_back(std::move(m), std::move(gg));
  }
  for (const auto& [d, rows] : shared) out.shared_turns += rows.size();
  if (out.shared_turns == 0) {
    throw Error(ErrorCode::kNoOverlap, "model and gold share no Q/A turns");
  }

  AnnotationStreams streams;
  std::vector<double> verdicts;
  std::vector<int> truth;
  for (const auto& [dialogue_id, rows] : shared) {
    std::vector<TurnAnnotation> m_seq, g_seq;
    for (const auto& [m, g] : rows) {
      m_seq.push_back(m);
      g_seq.push_back(g);
      if (m.outcome && g.outcome) {
        verdicts.push_back(*m.outcome == Outcome::kWitness ? 1.0 : 0.0);
        truth.push_back(*g.outcome == Outcome::kWitness ? 1 : 0);
      }
    }
    out.series.emplace_back(ScoreSequence(m_seq, cfg), ScoreSequence(g_seq, cfg));
    auto& ms = streams[out.model];
    ms.insert(ms.end(), m_seq.begin(), m_seq.end());
    auto& gs = streams[out.gold];
    gs.insert(gs.end(), g_seq.begin(), g_seq.end());
  }
  out.agreement = ComputeAgreement(corpus, streams, cfg, {.gold = out.gold});
  if (!truth.empty()) {
    try {
      out.outcome_auc = RocAuc(verdicts, truth);
    } catch (const Error&) {
      out.outcome_auc.reset();
    }
  }
  return out;
}

HumanComparison CompareToHuman(const EvalRun& run, const Corpus& corpus,
                               const std::string& gold_annotator,
                               const WeightConfig& cfg) {
  std::vector<TurnAnnotation> gold;
  for (const auto& a : corpus.annotations) {
    if (a.annotator_id == gold_annotator) gold.push_back(a);
  }
  if (gold.empty()) {
    throw Error(ErrorCode::kNoOverlap,
                "corpus has no annotations by '" + gold_annotator + "'",
                gold_annotator);
  }
  return CompareToHuman(corpus, run.Annotations(), gold, cfg);
}

nlohmann::json HumanComparisonToJson(const HumanComparison& c) {
  nlohmann::json series = nlohmann::json::array();
  for (const auto& [m, g] : c.series) {
    series.push_back({{"dialogue_id", m.dialogue_id},
                      {"turn_index", m.turn_index},
                      {"model", {{"bat", m.bat}, {"pat", m.pat}, {"nrbat", m.nrbat}}},
                      {"gold", {{"bat", g.bat}, {"pat", g.pat}, {"nrbat", g.nrbat}}}});
  }
  return {{"model", c.model},
          {"gold", c.gold},
          {"shared_turns", c.shared_turns},
          {"excluded_turns", c.excluded_turns},
          {"outcome_auc", c.outcome_auc ? nlohmann::json(*c.outcome_auc) : nlohmann::json()},
          {"agreement", AgreementToJson(c.agreement)},
          {"series", std::move(series)}};
}

GroupScores GroupAgreement(const Corpus& corpus,
                           const std::vector<TurnAnnotation>& model,
                           const std::vector<TurnAnnotation>& gold,
                           const WeightConfig& cfg) {
  std::map<std::string, std::set<std::string>> groups;
  for (const Dialogue& d : corpus.dialogues) {
    groups[d.trial_id + "/" + std::string(SideName(d.witness_side))].insert(d.id);
  }
  GroupScores out;
  for (const auto& [group, dialogues] : groups) {
    HumanComparison c;
    try {
      c = CompareToHuman(corpus, Restrict(model, dialogues), Restrict(gold, dialogues), cfg);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNoOverlap || e.code() == ErrorCode::kNoSharedItems) {
        continue;
      }
      throw;
    }
    auto& row = out[group];
    const AgreementReport& r = c.agreement;
    for (const char* m : {"bat", "pat", "nrbat"}) {
      if (auto it = r.spearman.find(m); it != r.spearman.end() && it->second) {
        row[m] = it->second->rho;
      }
    }
    if (r.cohen_kappa_commitment) row["commit"] = *r.cohen_kappa_commitment;
    for (const char* m : {"rel", "man", "qual"}) {
      if (auto it = r.randolph_kappa.find(m); it != r.randolph_kappa.end() && it->second) {
        row[m] = *it->second;
      }
    }
    if (!r.consistency_no_positives) row["const"] = r.consistency_tpr;
  }
  return out;
}

std::vector<EffectSizeSummary> CompareConditions(const GroupScores& treatment,
                                                 const GroupScores& control,
                                                 const std::vector<std::string>& metrics,
                                                 const EffectSizeOptions& opts) {
  EffectSizeOptions o = opts;
  o.n_comparisons = metrics.size();
  std::vector<EffectSizeSummary> out;
  for (const std::string& metric : metrics) {
    std::vector<double> t, c;
    for (const auto& [group, scores] : treatment) {
      auto other = control.find(group);
      if (other == control.end()) continue;
      auto a = scores.find(metric);
      auto b = other->second.find(metric);
      if (a == scores.end() || b == other->second.end()) continue;
      t.push_back(a->second);
      c.push_back(b->second);
    }
    if (t.empty()) continue;
    out.push_back(SummarizeEffect(metric, t, c, o));
  }
  return out;
}

}  // namespace cobra
