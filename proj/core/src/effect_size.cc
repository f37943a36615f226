#include "cobra/effect_size.h"

#include <cmath>

#include "cobra/error.h"

namespace cobra {

EffectSizeSummary SummarizeEffect(const std::string& metric,
                                  std::span<const double> treatment,
                                  std::span<const double> control,
                                  const EffectSizeOptions& opts) {
  if (treatment.size() != control.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                metric + ": treatment and control differ in length");
  }
  if (treatment.empty()) {
    throw Error(ErrorCode::kEmptySeries, metric + ": no comparisons");
  }
  EffectSizeSummary s;
  s.metric = metric;
  s.n = treatment.size();
  std::vector<double> diff(s.n);
  for (std::size_t i = 0; i < s.n; ++i) {
    diff[i] = treatment[i] - control[i];
    if (std::fabs(diff[i]) <= opts.tie_tolerance) {
      ++s.ties;
    } else if (diff[i] > 0) {
      ++s.wins;
    } else {
      ++s.loses;
    }
  }
  s.delta_mu = Mean(diff);
  s.median = Median(diff);
  s.sd = SampleSd(diff);
  s.ci95 = BootstrapMeanCi(diff, opts.bootstrap);
  if (s.n >= 2 && s.sd > 0.0) {
    const auto t = PairedTTest(treatment, control, opts.n_comparisons);
    s.p_raw = t.p_raw;
    s.p_corrected = t.p_bonferroni;
    s.significant = s.p_corrected < opts.alpha;
  }
  return s;
}

nlohmann::json EffectSizeToJson(const EffectSizeSummary& s) {
  return {{"metric", s.metric},
          {"wins", s.wins},
          {"loses", s.loses},
          {"ties", s.ties},
          {"delta_mu", s.delta_mu},
          {"median", s.median},
          {"sd", s.sd},
          {"ci95", {s.ci95.low, s.ci95.high}},
          {"p_raw", s.p_raw},
          {"p_corrected", s.p_corrected},
          {"significant", s.significant},
          {"n", s.n}};
}

}  // namespace cobra
