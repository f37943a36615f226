#include "cobra/regression.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "cobra/error.h"

namespace cobra {
namespace {

constexpr double kZ975 = 1.959963984540054;

// log(1 + exp(x)) without overflow.
double Softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double LogLikelihood(const Eigen::VectorXd& eta, std::span<const int> y) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    ll += y[i] != 0 ? -Softplus(-eta[i]) : -Softplus(eta[i]);
  }
  return ll;
}

Coefficient MakeCoefficient(std::string name, double beta, double se) {
  Coefficient c;
  c.name = std::move(name);
  c.beta = beta;
  c.se = se;
  c.odds_ratio = std::exp(beta);
  c.ci95 = {std::exp(beta - kZ975 * se), std::exp(beta + kZ975 * se)};
  c.z = se > 0 ? beta / se : 0.0;
  c.p_value = std::erfc(std::fabs(c.z) / std::sqrt(2.0));
  return c;
}

}  // namespace

const Coefficient* RegressionFit::Find(std::string_view name) const {
  if (intercept.name == name) return &intercept;
  for (const auto& c : coefficients) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

RegressionFit FitLogistic(std::span<const int> y,
                          const std::vector<std::vector<double>>& columns,
                          const std::vector<std::string>& names,
                          const LogisticOptions& opts) {
  const std::size_t n = y.size();
  const std::size_t p = columns.size();
  if (names.size() != p) {
    throw Error(ErrorCode::kLengthMismatch, "one name per predictor required");
  }
  for (const auto& col : columns) {
    if (col.size() != n) {
      throw Error(ErrorCode::kLengthMismatch,
                  "predictor columns must match the outcome length");
    }
  }
  if (n < p + 1 || n == 0) {
    throw Error(ErrorCode::kTooFewSamples,
                "need at least one more row than predictors");
  }
  std::size_t positives = 0;
  for (int v : y) positives += v != 0;
  if (positives == 0 || positives == n) {
    throw Error(ErrorCode::kSeparation,
                "outcome is constant; nothing to fit (degenerate)");
  }

  Eigen::MatrixXd X(n, p + 1);
  Eigen::VectorXd yv(n);
  for (std::size_t i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    yv[i] = y[i] != 0 ? 1.0 : 0.0;
    for (std::size_t j = 0; j < p; ++j) X(i, j + 1) = columns[j][i];
  }
  for (std::size_t j = 0; j < p; ++j) {
    const auto col = X.col(j + 1);
    if ((col.array() == col[0]).all()) {
      throw Error(ErrorCode::kRankDeficient,
                  "predictor '" + names[j] + "' is constant", names[j]);
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (static_cast<std::size_t>(qr.rank()) < p + 1) {
    throw Error(ErrorCode::kRankDeficient,
                "predictor matrix is rank deficient");
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
  Eigen::VectorXd prob(n);
  Eigen::MatrixXd info(p + 1, p + 1);
  RegressionFit fit;
  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    const Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd w(n);
    for (std::size_t i = 0; i < n; ++i) {
      prob[i] = Sigmoid(eta[i]);
      w[i] = prob[i] * (1.0 - prob[i]);
    }
    info = X.transpose() * w.asDiagonal() * X;
    const Eigen::VectorXd score = X.transpose() * (yv - prob);
    const Eigen::VectorXd step = info.ldlt().solve(score);
    if (!step.allFinite()) break;
    beta += step;
    fit.iterations = iter;
    if (step.cwiseAbs().maxCoeff() < opts.tolerance) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) {
    throw Error(ErrorCode::kSeparation,
                "IRLS did not converge after " +
                    std::to_string(opts.max_iterations) +
                    " iterations; estimates diverge (max |beta| = " +
                    std::to_string(beta.cwiseAbs().maxCoeff()) + ")");
  }

  const Eigen::VectorXd eta = X * beta;
  Eigen::VectorXd w(n);
  for (std::size_t i = 0; i < n; ++i) {
    prob[i] = Sigmoid(eta[i]);
    w[i] = prob[i] * (1.0 - prob[i]);
  }
  info = X.transpose() * w.asDiagonal() * X;
  const Eigen::MatrixXd cov = info.inverse();

  fit.n = n;
  fit.intercept = MakeCoefficient("(Intercept)", beta[0], std::sqrt(cov(0, 0)));
  for (std::size_t j = 0; j < p; ++j) {
    fit.coefficients.push_back(
        MakeCoefficient(names[j], beta[j + 1], std::sqrt(cov(j + 1, j + 1))));
  }
  fit.log_likelihood = LogLikelihood(eta, y);
  fit.aic = 2.0 * static_cast<double>(p + 1) - 2.0 * fit.log_likelihood;
  const double pbar = static_cast<double>(positives) / static_cast<double>(n);
  const double ll0 = static_cast<double>(positives) * std::log(pbar) +
                     static_cast<double>(n - positives) * std::log1p(-pbar);
  fit.aic_null = 2.0 - 2.0 * ll0;

  fit.fitted.assign(prob.data(), prob.data() + n);
  double sum1 = 0.0, sum0 = 0.0;
  std::size_t correct = 0;
  std::vector<int> labels(y.begin(), y.end());
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = y[i] != 0;
    (pos ? sum1 : sum0) += prob[i];
    correct += (prob[i] >= 0.5) == pos;
    labels[i] = pos ? 1 : 0;
  }
  fit.tjur_r2 = sum1 / static_cast<double>(positives) -
                sum0 / static_cast<double>(n - positives);
  fit.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  fit.auc = RocAuc(fit.fitted, labels);

  auto dist = BootstrapDistribution(
      n, opts.auc_bootstrap,
      [&](std::span<const std::size_t> idx) -> std::optional<double> {
        std::vector<double> s;
        std::vector<int> l;
        s.reserve(idx.size());
        l.reserve(idx.size());
        int pos = 0;
        for (std::size_t i : idx) {
          s.push_back(fit.fitted[i]);
          l.push_back(labels[i]);
          pos += labels[i];
        }
        if (pos == 0 || pos == static_cast<int>(idx.size())) return std::nullopt;
        return RocAuc(s, l);
      });
  if (!dist.empty()) fit.auc_ci95 = PercentileInterval(std::move(dist), opts.auc_bootstrap.level);
  return fit;
}

OutcomeDataset BuildOutcomeDataset(const Corpus& corpus, const WeightConfig& cfg,
                                   const std::vector<std::string>& annotators) {
  const std::vector<std::string> who =
      annotators.empty() ? corpus.Annotators() : annotators;
  OutcomeDataset data;
  for (const std::string& annotator : who) {
    for (const Dialogue& d : corpus.dialogues) {
      const auto labels = corpus.AnnotationsFor(d.id, annotator);
      if (labels.empty()) continue;
      const MetricSeries s = ScoreSequence(labels, cfg);
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!labels[i].outcome) continue;
        data.y.push_back(*labels[i].outcome == Outcome::kWitness ? 1 : 0);
        data.bat.push_back(s.bat[i]);
        data.pat.push_back(s.pat[i]);
        data.reasons.push_back(labels[i].reasons);
        data.annotator.push_back(annotator);
      }
    }
  }
  return data;
}

OutcomeDataset FilterByReason(const OutcomeDataset& data, Reason reason) {
  OutcomeDataset out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data.reasons[i].count(reason)) continue;
    out.y.push_back(data.y[i]);
    out.bat.push_back(data.bat[i]);
    out.pat.push_back(data.pat[i]);
    out.reasons.push_back(data.reasons[i]);
    out.annotator.push_back(data.annotator[i]);
  }
  return out;
}

RegressionFit FitOutcomeModel(const OutcomeDataset& data,
                              const LogisticOptions& opts) {
  int pos = 0;
  for (int v : data.y) pos += v;
  if (data.size() == 0 || pos == 0 || pos == static_cast<int>(data.size())) {
    throw Error(ErrorCode::kOneClassOnly,
                "outcome model needs both Witness and Questioner outcomes (" +
                    std::to_string(data.size()) + " rows)");
  }
  return FitLogistic(data.y, {data.bat, data.pat}, {"BaT", "PaT"}, opts);
}

ConditionedFits ConditionedOutcomeModels(const Corpus& corpus,
                                         const WeightConfig& cfg, Reason reason,
                                         const LogisticOptions& opts) {
  const OutcomeDataset all = BuildOutcomeDataset(corpus, cfg);
  ConditionedFits out;
  out.reason = reason;
  out.baseline = FitOutcomeModel(all, opts);
  out.conditioned = FitOutcomeModel(FilterByReason(all, reason), opts);
  return out;
}

}  // namespace cobra
