#include "cobra/agreement.h"

#include <algorithm>
#include <tuple>

#include "cobra/error.h"

namespace cobra {
namespace {

using TurnKey = std::pair<std::string, int>;
using StreamIndex = std::map<TurnKey, const TurnAnnotation*>;

StreamIndex IndexStream(const std::vector<TurnAnnotation>& stream) {
  StreamIndex out;
  for (const auto& a : stream) out[{a.dialogue_id, a.turn_index}] = &a;
  return out;
}

int ViolationBit(const TurnAnnotation& a, const WeightConfig& cfg, int maxim) {
  switch (maxim) {
    case 0: return a.maxims.relevance >= cfg.rel_violation_threshold ? 1 : 0;
    case 1: return a.maxims.manner >= cfg.man_violation_threshold ? 1 : 0;
    default: return a.maxims.quality == 0 ? 1 : 0;
  }
}

std::optional<RankCorrelation> TrySpearman(const std::vector<double>& x,
                                           const std::vector<double>& y) {
  try {
    return SpearmanRho(x, y);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::optional<double> TryKappa(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.empty()) return std::nullopt;
  try {
    return CohenKappa(a, b);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::optional<double> MeanOf(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  return Mean(xs);
}

}  // namespace

AgreementReport ComputeAgreement(const Corpus& corpus,
                                 const AnnotationStreams& streams,
                                 const WeightConfig& cfg,
                                 const AgreementOptions& opts) {
  if (streams.size() < 2) {
    throw Error(ErrorCode::kInsufficientData,
                "agreement needs at least two annotation streams, got " +
                    std::to_string(streams.size()));
  }
  if (opts.gold && !streams.count(*opts.gold)) {
    throw Error(ErrorCode::kInsufficientData,
                "gold stream '" + *opts.gold + "' not present");
  }

  AgreementReport report;
  std::vector<StreamIndex> indices;
  for (const auto& [name, stream] : streams) {
    report.raters.push_back(name);
    indices.push_back(IndexStream(stream));
  }
  const std::size_t r = report.raters.size();

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < r; ++a) {
    for (std::size_t b = a + 1; b < r; ++b) {
      if (opts.gold) {
        if (report.raters[a] == *opts.gold) {
          pairs.emplace_back(a, b);
        } else if (report.raters[b] == *opts.gold) {
          pairs.emplace_back(b, a);
        }
      } else {
        pairs.emplace_back(a, b);
      }
    }
  }

  std::vector<double> tpr_values;
  bool any_positive = false;
  std::size_t total_shared = 0;

  for (auto [ia, ib] : pairs) {
    PairAgreement pa;
    pa.rater_a = report.raters[ia];
    pa.rater_b = report.raters[ib];
    std::vector<double> bat_a, bat_b, pat_a, pat_b, nr_a, nr_b;
    std::vector<int> commit_a, commit_b, out_a, out_b;
    std::vector<bool> incons_a, incons_b;

    for (const Dialogue& d : corpus.dialogues) {
      std::vector<TurnAnnotation> seq_a, seq_b;
      for (const Turn& t : d.turns) {
        if (!t.is_qa_pair) continue;
        auto fa = indices[ia].find({d.id, t.index});
        auto fb = indices[ib].find({d.id, t.index});
        if (fa == indices[ia].end() || fb == indices[ib].end()) continue;
        seq_a.push_back(*fa->second);
        seq_b.push_back(*fb->second);
      }
      if (seq_a.empty()) continue;
      const MetricSeries sa = ScoreSequence(seq_a, cfg);
      const MetricSeries sb = ScoreSequence(seq_b, cfg);
      bat_a.insert(bat_a.end(), sa.bat.begin(), sa.bat.end());
      bat_b.insert(bat_b.end(), sb.bat.begin(), sb.bat.end());
      pat_a.insert(pat_a.end(), sa.pat.begin(), sa.pat.end());
      pat_b.insert(pat_b.end(), sb.pat.begin(), sb.pat.end());
      nr_a.insert(nr_a.end(), sa.nrbat.begin(), sa.nrbat.end());
      nr_b.insert(nr_b.end(), sb.nrbat.begin(), sb.nrbat.end());
      for (std::size_t i = 0; i < seq_a.size(); ++i) {
        commit_a.push_back(static_cast<int>(seq_a[i].commitment));
        commit_b.push_back(static_cast<int>(seq_b[i].commitment));
        incons_a.push_back(seq_a[i].maxims.consistency == 1);
        incons_b.push_back(seq_b[i].maxims.consistency == 1);
        if (seq_a[i].outcome && seq_b[i].outcome) {
          out_a.push_back(static_cast<int>(*seq_a[i].outcome));
          out_b.push_back(static_cast<int>(*seq_b[i].outcome));
        }
      }
    }
    pa.shared_turns = commit_a.size();
    total_shared += pa.shared_turns;
    pa.spearman["bat"] = TrySpearman(bat_a, bat_b);
    pa.spearman["pat"] = TrySpearman(pat_a, pat_b);
    pa.spearman["nrbat"] = TrySpearman(nr_a, nr_b);
    pa.commitment_kappa = TryKappa(commit_a, commit_b);
    pa.outcome_kappa = TryKappa(out_a, out_b);

    const auto forward = ComputeTruePositiveRate(incons_a, incons_b);
    if (!forward.no_positives) pa.consistency_tpr = forward.rate;
    any_positive |= !forward.no_positives;
    tpr_values.push_back(forward.rate);
    if (!opts.gold) {
      const auto backward = ComputeTruePositiveRate(incons_b, incons_a);
      any_positive |= !backward.no_positives;
      tpr_values.push_back(backward.rate);
    }
    report.pairs.push_back(std::move(pa));
  }

  if (total_shared == 0) {
    throw Error(ErrorCode::kNoSharedItems,
                "no pair of annotation streams labels a common turn");
  }

  for (const char* metric : {"bat", "pat", "nrbat"}) {
    std::vector<double> rhos;
    double worst_p = 0.0;
    for (const auto& pa : report.pairs) {
      const auto& v = pa.spearman.at(metric);
      if (!v) continue;
      rhos.push_back(v->rho);
      worst_p = std::max(worst_p, v->p);
    }
    if (rhos.empty()) {
      report.spearman[metric] = std::nullopt;
    } else {
      report.spearman[metric] = RankCorrelation{Mean(rhos), worst_p};
    }
  }
  std::vector<double> ck, ok;
  for (const auto& pa : report.pairs) {
    if (pa.commitment_kappa) ck.push_back(*pa.commitment_kappa);
    if (pa.outcome_kappa) ok.push_back(*pa.outcome_kappa);
  }
  report.cohen_kappa_commitment = MeanOf(ck);
  report.outcome_kappa = MeanOf(ok);
  report.consistency_tpr = tpr_values.empty() ? 0.0 : Mean(tpr_values);
  report.consistency_no_positives = !any_positive;

  // Items labelled by every stream feed the multirater statistics.
  std::vector<std::vector<int>> violations[3];
  std::vector<double> jaccards;
  std::size_t full_reason_agreement = 0;
  for (const Dialogue& d : corpus.dialogues) {
    for (const Turn& t : d.turns) {
      if (!t.is_qa_pair) continue;
      std::vector<const TurnAnnotation*> labels;
      for (const auto& idx : indices) {
        auto it = idx.find({d.id, t.index});
        if (it != idx.end()) labels.push_back(it->second);
      }
      if (labels.empty()) continue;
      if (labels.size() < r) {
        ++report.excluded_items;
        continue;
      }
      ++report.n_items;
      for (int m = 0; m < 3; ++m) {
        std::vector<int> row;
        for (const auto* a : labels) row.push_back(ViolationBit(*a, cfg, m));
        violations[m].push_back(std::move(row));
      }
      const bool outcomes_agree =
          std::all_of(labels.begin(), labels.end(), [&](const auto* a) {
            return a->outcome && labels.front()->outcome &&
                   *a->outcome == *labels.front()->outcome;
          });
      if (!outcomes_agree) continue;
      double sum = 0.0;
      int count = 0;
      bool identical = true;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t j = i + 1; j < labels.size(); ++j) {
          sum += Jaccard(labels[i]->reasons, labels[j]->reasons);
          ++count;
          identical &= labels[i]->reasons == labels[j]->reasons;
        }
      }
      jaccards.push_back(sum / count);
      full_reason_agreement += identical;
    }
  }
  static const char* kMaxims[] = {"rel", "man", "qual"};
  for (int m = 0; m < 3; ++m) {
    report.randolph_kappa[kMaxims[m]] =
        violations[m].empty() ? std::nullopt
                              : std::optional<double>(RandolphKappa(violations[m], 2));
  }
  report.reasons_jaccard = MeanOf(jaccards);
  if (!jaccards.empty()) {
    report.reasons_full_agreement = static_cast<double>(full_reason_agreement) /
                                    static_cast<double>(jaccards.size());
  }
  return report;
}

AgreementReport AgreementAmongRaters(const Corpus& corpus,
                                     const std::vector<std::string>& raters,
                                     const WeightConfig& cfg) {
  const std::vector<std::string> who = raters.empty() ? corpus.Annotators() : raters;
  AnnotationStreams streams;
  for (const std::string& name : who) streams[name];
  for (const auto& a : corpus.annotations) {
    auto it = streams.find(a.annotator_id);
    if (it != streams.end()) it->second.push_back(a);
  }
  for (const auto& [name, stream] : streams) {
    if (stream.empty()) {
      throw Error(ErrorCode::kInsufficientData,
                  "rater '" + name + "' has no annotations");
    }
  }
  return ComputeAgreement(corpus, streams, cfg);
}

namespace {

nlohmann::json OptJson(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json();
}

nlohmann::json SpearmanJson(
    const std::map<std::string, std::optional<RankCorrelation>>& m) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [k, v] : m) {
    out[k] = v ? nlohmann::json{{"rho", v->rho}, {"p", v->p}} : nlohmann::json();
  }
  return out;
}

}  // namespace

nlohmann::json AgreementToJson(const AgreementReport& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : r.pairs) {
    pairs.push_back({{"rater_a", p.rater_a},
                     {"rater_b", p.rater_b},
                     {"shared_turns", p.shared_turns},
                     {"spearman", SpearmanJson(p.spearman)},
                     {"commitment_kappa", OptJson(p.commitment_kappa)},
                     {"outcome_kappa", OptJson(p.outcome_kappa)},
                     {"consistency_tpr", OptJson(p.consistency_tpr)}});
  }
  nlohmann::json randolph = nlohmann::json::object();
  for (const auto& [k, v] : r.randolph_kappa) randolph[k] = OptJson(v);
  return {{"raters", r.raters},
          {"spearman", SpearmanJson(r.spearman)},
          {"cohen_kappa_commitment", OptJson(r.cohen_kappa_commitment)},
          {"randolph_kappa", randolph},
          {"consistency_tpr", r.consistency_tpr},
          {"consistency_no_positives", r.consistency_no_positives},
          {"outcome_kappa", OptJson(r.outcome_kappa)},
          {"reasons_jaccard", OptJson(r.reasons_jaccard)},
          {"reasons_full_agreement", OptJson(r.reasons_full_agreement)},
          {"n_items", r.n_items},
          {"excluded_items", r.excluded_items},
          {"pairs", std::move(pairs)}};
}

}  // namespace cobra
