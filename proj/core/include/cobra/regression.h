#ifndef COBRA_REGRESSION_H_
#define COBRA_REGRESSION_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cobra/corpus.h"
#include "cobra/metrics.h"
#include "cobra/stats.h"

namespace cobra {

struct Coefficient {
  std::string name;
  double beta = 0.0;
  double se = 0.0;
  double odds_ratio = 1.0;
  Interval ci95;  // on the odds-ratio scale
  double z = 0.0;
  double p_value = 1.0;
};

struct RegressionFit {
  Coefficient intercept;
  std::vector<Coefficient> coefficients;
  double log_likelihood = 0.0;
  double aic = 0.0;
  double aic_null = 0.0;  // intercept-only model on the same rows
  double tjur_r2 = 0.0;
  double accuracy = 0.0;
  double auc = 0.0;
  Interval auc_ci95;
  std::size_t n = 0;
  int iterations = 0;
  bool converged = false;
  // In-sample fitted probabilities, row order.
  std::vector<double> fitted;

  const Coefficient* Find(std::string_view name) const;
};

struct LogisticOptions {
  double tolerance = 1e-8;  // on max |delta beta|
  int max_iterations = 100;
  BootstrapOptions auc_bootstrap;
};

// Maximum-likelihood logistic regression by iteratively reweighted least
// squares. `columns[j]` holds predictor j for every row; an intercept is
// added. Throws kLengthMismatch, kTooFewSamples, kRankDeficient or
// kSeparation (constant outcome, or estimates diverging without convergence).
RegressionFit FitLogistic(std::span<const int> y,
                          const std::vector<std::vector<double>>& columns,
                          const std::vector<std::string>& names,
                          const LogisticOptions& opts = {});

// One row per (annotator, annotated turn with an outcome): y = 1 when the
// witness won, predictors are that annotator's BaT and PaT at the turn.
struct OutcomeDataset {
  std::vector<int> y;
  std::vector<double> bat;
  std::vector<double> pat;
  std::vector<std::set<Reason>> reasons;
  std::vector<std::string> annotator;

  std::size_t size() const { return y.size(); }
};

// Each annotator's labels are scored per dialogue over the Q/A turns that
// annotator covered. `annotators` empty means everyone.
OutcomeDataset BuildOutcomeDataset(const Corpus& corpus, const WeightConfig& cfg,
                                   const std::vector<std::string>& annotators = {});

// Rows whose reasons include `reason`.
OutcomeDataset FilterByReason(const OutcomeDataset& data, Reason reason);

RegressionFit FitOutcomeModel(const OutcomeDataset& data,
                              const LogisticOptions& opts = {});

struct ConditionedFits {
  RegressionFit baseline;
  RegressionFit conditioned;
  Reason reason = Reason::kLogical;
};

// Baseline BaT/PaT outcome model plus the same model restricted to turns
// whose annotated reasons include `reason`. Throws kOneClassOnly when the
// subset is empty or lacks one outcome class.
ConditionedFits ConditionedOutcomeModels(const Corpus& corpus,
                                         const WeightConfig& cfg, Reason reason,
                                         const LogisticOptions& opts = {});

}  // namespace cobra

#endif  // COBRA_REGRESSION_H_
