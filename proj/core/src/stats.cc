#include "cobra/stats.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <boost/math/distributions/students_t.hpp>

#include "cobra/error.h"

namespace cobra {
namespace {

void RequireSameLength(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::kLengthMismatch,
                std::string(what) + ": inputs differ in length (" +
                    std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

double Mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double Median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double SampleSd(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = Mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::vector<double> AverageRanks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double StudentTwoSidedP(double t, double df) {
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

RankCorrelation SpearmanRho(std::span<const double> x,
                            std::span<const double> y) {
  RequireSameLength(x.size(), y.size(), "spearman");
  const std::size_t n = x.size();
  if (n < 3) {
    throw Error(ErrorCode::kTooFewSamples, "spearman needs at least 3 pairs");
  }
  const auto rx = AverageRanks(x);
  const auto ry = AverageRanks(y);
  const double mx = Mean(rx);
  const double my = Mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorCode::kZeroVariance,
                "spearman is undefined for a constant series");
  }
  RankCorrelation out;
  out.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(n - 2);
  if (std::fabs(out.rho) >= 1.0) {
    out.p = 0.0;
  } else {
    const double t = out.rho * std::sqrt(df / (1.0 - out.rho * out.rho));
    out.p = StudentTwoSidedP(t, df);
  }
  return out;
}

double CohenKappa(std::span<const int> a, std::span<const int> b) {
  RequireSameLength(a.size(), b.size(), "cohen kappa");
  if (a.empty()) {
    throw Error(ErrorCode::kTooFewSamples, "cohen kappa needs at least one item");
  }
  const double n = static_cast<double>(a.size());
  std::map<int, double> ca, cb;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
    if (a[i] == b[i]) agree += 1.0;
  }
  const double po = agree / n;
  double pe = 0.0;
  for (const auto& [label, count] : ca) {
    auto it = cb.find(label);
    if (it != cb.end()) pe += (count / n) * (it->second / n);
  }
  if (pe >= 1.0) {
    if (po >= 1.0) return 1.0;
    throw Error(ErrorCode::kDegenerateAgreement,
                "chance agreement is 1 but observed agreement is not");
  }
  return (po - pe) / (1.0 - pe);
}

double RandolphKappa(const std::vector<std::vector<int>>& ratings, int k) {
  if (ratings.empty()) throw Error(ErrorCode::kBadShape, "no items to rate");
  if (k < 2) throw Error(ErrorCode::kBadShape, "need at least 2 categories");
  const std::size_t raters = ratings.front().size();
  if (raters < 2) throw Error(ErrorCode::kBadShape, "need at least 2 raters");
  double total = 0.0;
  for (const auto& item : ratings) {
    if (item.size() != raters) {
      throw Error(ErrorCode::kBadShape, "every item needs the same rater count");
    }
    std::map<int, double> counts;
    for (int label : item) {
      if (label < 0 || label >= k) {
        throw Error(ErrorCode::kBadShape, "label outside [0, k)");
      }
      counts[label] += 1.0;
    }
    double agreeing_pairs = 0.0;
    for (const auto& [label, c] : counts) agreeing_pairs += c * (c - 1.0);
    const double r = static_cast<double>(raters);
    total += agreeing_pairs / (r * (r - 1.0));
  }
  const double po = total / static_cast<double>(ratings.size());
  const double chance = 1.0 / static_cast<double>(k);
  return (po - chance) / (1.0 - chance);
}

TruePositiveRate ComputeTruePositiveRate(const std::vector<bool>& gold,
                                         const std::vector<bool>& pred) {
  RequireSameLength(gold.size(), pred.size(), "true positive rate");
  std::size_t tp = 0, fn = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!gold[i]) continue;
    (pred[i] ? tp : fn) += 1;
  }
  TruePositiveRate out;
  if (tp + fn == 0) {
    out.no_positives = true;
    return out;
  }
  out.rate = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return out;
}

double RocAuc(std::span<const double> scores, std::span<const int> labels) {
  RequireSameLength(scores.size(), labels.size(), "roc auc");
  const auto ranks = AverageRanks(scores);
  double pos = 0.0, neg = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0) {
      pos += 1.0;
      rank_sum += ranks[i];
    } else {
      neg += 1.0;
    }
  }
  if (pos == 0.0 || neg == 0.0) {
    throw Error(ErrorCode::kOneClassOnly, "AUC needs both classes present");
  }
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

std::vector<double> BootstrapDistribution(
    std::size_t n, const BootstrapOptions& opts,
    const std::function<std::optional<double>(std::span<const std::size_t>)>&
        statistic) {
  if (n == 0) throw Error(ErrorCode::kEmptySeries, "bootstrap of empty sample");
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> idx(n);
  std::vector<double> out;
  out.reserve(opts.n_resamples);
  for (std::size_t r = 0; r < opts.n_resamples; ++r) {
    for (auto& i : idx) i = pick(rng);
    if (auto v = statistic(idx)) out.push_back(*v);
  }
  return out;
}

double Quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::kEmptySeries, "quantile of nothing");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Interval PercentileInterval(std::vector<double> distribution, double level) {
  std::sort(distribution.begin(), distribution.end());
  const double tail = (1.0 - level) / 2.0;
  return {Quantile(distribution, tail), Quantile(distribution, 1.0 - tail)};
}

Interval BootstrapMeanCi(std::span<const double> samples,
                         const BootstrapOptions& opts) {
  if (samples.empty()) {
    throw Error(ErrorCode::kEmptySeries, "bootstrap of empty sample");
  }
  auto dist = BootstrapDistribution(
      samples.size(), opts,
      [&](std::span<const std::size_t> idx) -> std::optional<double> {
        double sum = 0.0;
        for (std::size_t i : idx) sum += samples[i];
        return sum / static_cast<double>(idx.size());
      });
  return PercentileInterval(std::move(dist), opts.level);
}

PairedTTestResult PairedTTest(std::span<const double> a,
                              std::span<const double> b,
                              std::size_t n_comparisons) {
  RequireSameLength(a.size(), b.size(), "paired t-test");
  if (a.size() < 2) {
    throw Error(ErrorCode::kTooFewSamples, "paired t-test needs n >= 2");
  }
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  PairedTTestResult out;
  out.delta_mu = Mean(diff);
  const double sd = SampleSd(diff);
  if (sd == 0.0) {
    throw Error(ErrorCode::kZeroVariance,
                "paired differences have zero variance (delta_mu = " +
                    std::to_string(out.delta_mu) + ")");
  }
  const double n = static_cast<double>(diff.size());
  out.df = n - 1.0;
  out.t = out.delta_mu / (sd / std::sqrt(n));
  out.p_raw = StudentTwoSidedP(out.t, out.df);
  out.p_bonferroni =
      std::min(1.0, out.p_raw * static_cast<double>(std::max<std::size_t>(1, n_comparisons)));
  return out;
}

}  // namespace cobra
