#ifndef COBRA_STATS_H_
#define COBRA_STATS_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace cobra {

inline constexpr std::uint64_t kDefaultSeed = 20240601;

struct Interval {
  double low = 0.0;
  double high = 0.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

struct RankCorrelation {
  double rho = 0.0;
  double p = 1.0;
};

// Ranks starting at 1; tied values share the mean of their positions.
std::vector<double> AverageRanks(std::span<const double> xs);

// Spearman's rho with average ranks; p from the t approximation with n - 2
// degrees of freedom. Throws kLengthMismatch, kTooFewSamples (n < 3) or
// kZeroVariance when either ranking is constant.
RankCorrelation SpearmanRho(std::span<const double> x, std::span<const double> y);

// (p_o - p_e) / (1 - p_e). When p_e == 1 returns 1 if the raters agree
// perfectly, otherwise throws kDegenerateAgreement. Throws kLengthMismatch,
// kTooFewSamples on empty input.
double CohenKappa(std::span<const int> a, std::span<const int> b);

// Free-marginal multirater kappa. `ratings[item][rater]` holds labels in
// [0, k). Throws kBadShape for ragged, empty, single-rater or k < 2 input.
double RandolphKappa(const std::vector<std::vector<int>>& ratings, int k);

// |a ∩ b| / |a ∪ b|, 1 when both are empty.
template <typename T>
double Jaccard(const std::set<T>& a, const std::set<T>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const T& x : a) inter += b.count(x);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

struct TruePositiveRate {
  double rate = 0.0;
  bool no_positives = false;  // gold had no positives; rate is 0 by convention
};

TruePositiveRate ComputeTruePositiveRate(const std::vector<bool>& gold,
                                         const std::vector<bool>& pred);

// Mann-Whitney AUC with half credit for ties. Labels are 0/1. Throws
// kLengthMismatch or kOneClassOnly.
double RocAuc(std::span<const double> scores, std::span<const int> labels);

struct BootstrapOptions {
  std::size_t n_resamples = 2000;
  std::uint64_t seed = kDefaultSeed;
  double level = 0.95;
};

// Calls `statistic` once per resample with the resampled item indices
// (drawn with replacement from [0, n)). Resamples for which the statistic
// returns nullopt are dropped. Deterministic for a given seed.
std::vector<double> BootstrapDistribution(
    std::size_t n, const BootstrapOptions& opts,
    const std::function<std::optional<double>(std::span<const std::size_t>)>&
        statistic);

// Linear-interpolation quantile of sorted data (Hyndman-Fan type 7).
double Quantile(std::span<const double> sorted, double q);

// Central percentile interval of a bootstrap distribution.
Interval PercentileInterval(std::vector<double> distribution, double level);

// Percentile bootstrap interval for the mean. Throws kEmptySeries.
Interval BootstrapMeanCi(std::span<const double> samples,
                         const BootstrapOptions& opts = {});

struct PairedTTestResult {
  double delta_mu = 0.0;  // mean of a - b
  double t = 0.0;
  double df = 0.0;
  double p_raw = 1.0;
  double p_bonferroni = 1.0;
};

// Two-sided paired t-test on a - b; Bonferroni p = min(1, p * n_comparisons).
// Throws kLengthMismatch, kTooFewSamples (n < 2) or kZeroVariance.
PairedTTestResult PairedTTest(std::span<const double> a,
                              std::span<const double> b,
                              std::size_t n_comparisons = 1);

// Two-sided p-value of a Student t statistic.
double StudentTwoSidedP(double t, double df);

double Mean(std::span<const double> xs);
double Median(std::vector<double> xs);
// Sample standard deviation (n - 1 denominator); 0 for n < 2.
double SampleSd(std::span<const double> xs);

}  // namespace cobra

#endif  // COBRA_STATS_H_
