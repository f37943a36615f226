#ifndef COBRA_EFFECT_SIZE_H_
#define COBRA_EFFECT_SIZE_H_

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cobra/stats.h"

namespace cobra {

// Paired comparison of one metric between a treatment condition (e.g. the
// larger model, or the reasoning variant) and its control.
struct EffectSizeSummary {
  std::string metric;
  int wins = 0;   // treatment > control
  int loses = 0;  // treatment < control
  int ties = 0;
  double delta_mu = 0.0;  // mean of treatment - control
  double median = 0.0;
  double sd = 0.0;
  Interval ci95;
  double p_raw = 1.0;
  double p_corrected = 1.0;
  bool significant = false;
  std::size_t n = 0;
};

struct EffectSizeOptions {
  std::size_t n_comparisons = 1;  // Bonferroni family size
  double alpha = 0.05;
  // |difference| at or below this counts as a tie.
  double tie_tolerance = 0.0;
  BootstrapOptions bootstrap;
};

// Throws kLengthMismatch or kEmptySeries. Zero-variance differences yield
// p = 1 and no significance.
EffectSizeSummary SummarizeEffect(const std::string& metric,
                                  std::span<const double> treatment,
                                  std::span<const double> control,
                                  const EffectSizeOptions& opts = {});

nlohmann::json EffectSizeToJson(const EffectSizeSummary& s);

}  // namespace cobra

#endif  // COBRA_EFFECT_SIZE_H_
