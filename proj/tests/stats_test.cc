#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cobra/agreement.h"
#include "cobra/effect_size.h"
#include "cobra/error.h"
#include "cobra/regression.h"
#include "cobra/report.h"
#include "cobra/stats.h"
#include "support/fixtures.h"

namespace cobra {
namespace {

template <typename F>
ErrorCode CodeOf(F f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIoError;
}

using Vec = std::vector<double>;
using IVec = std::vector<int>;

// Reference p-values frozen from scipy.stats 1.x (spearmanr, ttest_rel).
constexpr double kSpearmanP5 = 0.10408803866182788;
constexpr double kSpearmanTiesRho = 0.8088235294117647;
constexpr double kSpearmanTiesP = 0.051329063199674334;
constexpr double kPairedT = 2.008316044185608;
constexpr double kPairedP = 0.09136743471209897;

TEST(Spearman, IdenticalAndReversed) {
  Vec x = {3, 1, 4, 1.5, 9, 2.6};
  EXPECT_NEAR(SpearmanRho(x, x).rho, 1.0, 1e-12);
  Vec y = x;
  for (double& v : y) v = -v;
  EXPECT_NEAR(SpearmanRho(x, y).rho, -1.0, 1e-12);
}

TEST(Spearman, HandRankedFixture) {
  // d = (0, -1, 1, -1, 1): rho = 1 - 6 * 4 / (5 * 24) = 0.8.
  Vec x = {1, 2, 3, 4, 5}, y = {1, 3, 2, 5, 4};
  auto r = SpearmanRho(x, y);
  EXPECT_NEAR(r.rho, 0.8, 1e-9);
  EXPECT_NEAR(r.p, kSpearmanP5, 1e-9);
}

TEST(Spearman, TiesUseAverageRanks) {
  Vec x = {1, 2, 2, 4, 5, 6}, y = {2, 1, 3, 3, 6, 5};
  EXPECT_EQ(AverageRanks(x), (Vec{1, 2.5, 2.5, 4, 5, 6}));
  auto r = SpearmanRho(x, y);
  EXPECT_NEAR(r.rho, kSpearmanTiesRho, 1e-12);
  EXPECT_NEAR(r.p, kSpearmanTiesP, 1e-9);
}

TEST(Spearman, SymmetricAndBounded) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int rep = 0; rep < 50; ++rep) {
    Vec x(10), y(10);
    for (auto& v : x) v = std::round(n(rng) * 2);
    for (auto& v : y) v = std::round(n(rng) * 2);
    try {
      auto a = SpearmanRho(x, y), b = SpearmanRho(y, x);
      EXPECT_EQ(a.rho, b.rho);
      EXPECT_LE(std::fabs(a.rho), 1.0);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kZeroVariance);
    }
  }
}

TEST(Spearman, Errors) {
  EXPECT_EQ(CodeOf([] { SpearmanRho(Vec{1, 2, 3}, Vec{1, 2}); }), ErrorCode::kLengthMismatch);
  EXPECT_EQ(CodeOf([] { SpearmanRho(Vec{1, 2}, Vec{1, 2}); }), ErrorCode::kTooFewSamples);
}

TEST(CohenKappa, PerfectAgreement) {
  IVec a = {1, 2, 3, 2, 1};
  EXPECT_EQ(CohenKappa(a, a), 1.0);
}

TEST(CohenKappa, HalfAgreementIsZero) {
  EXPECT_NEAR(CohenKappa(IVec{0, 0, 1, 1}, IVec{0, 1, 0, 1}), 0.0, 1e-9);
}

TEST(CohenKappa, IndependentRatersNearZero) {
  std::mt19937_64 rng(42);
  IVec a(10000), b(10000);
  for (auto& v : a) v = static_cast<int>(rng() & 1);
  for (auto& v : b) v = static_cast<int>(rng() & 1);
  EXPECT_LT(std::fabs(CohenKappa(a, b)), 0.05);
}

TEST(CohenKappa, JointRelabelingInvariant) {
  IVec a = {1, 2, 3, 3, 1, 2, 2}, b = {1, 3, 3, 2, 1, 2, 1};
  IVec pa, pb;
  for (int v : a) pa.push_back((v * 7) % 5);
  for (int v : b) pb.push_back((v * 7) % 5);
  EXPECT_NEAR(CohenKappa(a, b), CohenKappa(pa, pb), 1e-15);
}

TEST(CohenKappa, DegenerateChance) {
  EXPECT_EQ(CohenKappa(IVec{2, 2, 2}, IVec{2, 2, 2}), 1.0);
  EXPECT_EQ(CodeOf([] { CohenKappa(IVec{2, 2}, IVec{2, 2, 2}); }), ErrorCode::kLengthMismatch);
}

TEST(RandolphKappa, Fixtures) {
  EXPECT_EQ(RandolphKappa({{1, 1}, {0, 0}, {1, 1}}, 2), 1.0);
  EXPECT_NEAR(RandolphKappa({{1, 1}, {0, 1}, {0, 0}, {1, 0}}, 2), 0.0, 1e-9);
  EXPECT_NEAR(RandolphKappa({{0, 0, 1}}, 2), -1.0 / 3, 1e-9);
}

TEST(RandolphKappa, BadShape) {
  EXPECT_EQ(CodeOf([] { RandolphKappa({{1, 1}, {0}}, 2); }), ErrorCode::kBadShape);
  EXPECT_EQ(CodeOf([] { RandolphKappa({{1}}, 2); }), ErrorCode::kBadShape);
  EXPECT_EQ(CodeOf([] { RandolphKappa({}, 2); }), ErrorCode::kBadShape);
  EXPECT_EQ(CodeOf([] { RandolphKappa({{0, 0}}, 1); }), ErrorCode::kBadShape);
}

TEST(Jaccard, Fixtures) {
  EXPECT_EQ(Jaccard(std::set<int>{1, 2}, std::set<int>{1, 2}), 1.0);
  EXPECT_EQ(Jaccard(std::set<int>{1}, std::set<int>{2}), 0.0);
  EXPECT_NEAR(Jaccard(std::set<int>{1, 2}, std::set<int>{2, 3}), 1.0 / 3, 1e-9);
  EXPECT_EQ(Jaccard(std::set<int>{}, std::set<int>{}), 1.0);
}

TEST(TruePositiveRate, Fixtures) {
  auto all = ComputeTruePositiveRate({true, true}, {true, true});
  EXPECT_EQ(all.rate, 1.0);
  EXPECT_FALSE(all.no_positives);
  auto none = ComputeTruePositiveRate({false, false}, {true, false});
  EXPECT_EQ(none.rate, 0.0);
  EXPECT_TRUE(none.no_positives);
  EXPECT_NEAR(ComputeTruePositiveRate({true, true, false, true}, {true, false, false, false}).rate,
              1.0 / 3, 1e-9);
  EXPECT_EQ(CodeOf([] { ComputeTruePositiveRate({true}, {true, false}); }),
            ErrorCode::kLengthMismatch);
}

TEST(RocAuc, Fixtures) {
  EXPECT_EQ(RocAuc(Vec{0.1, 0.2, 0.8, 0.9}, IVec{0, 0, 1, 1}), 1.0);
  EXPECT_EQ(RocAuc(Vec{0.5, 0.5, 0.5, 0.5}, IVec{0, 1, 0, 1}), 0.5);
  EXPECT_NEAR(RocAuc(Vec{0.1, 0.4, 0.35, 0.8}, IVec{0, 0, 1, 1}), 0.75, 1e-9);
  EXPECT_EQ(CodeOf([] { RocAuc(Vec{0.1, 0.4}, IVec{1, 1}); }), ErrorCode::kOneClassOnly);
}

TEST(RocAuc, FlippedLabelsSumToOne) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u;
  for (int rep = 0; rep < 20; ++rep) {
    Vec s(30);
    IVec y(30), f(30);
    for (int i = 0; i < 30; ++i) {
      s[i] = std::round(u(rng) * 10) / 10;
      y[i] = i % 3 == 0;
      f[i] = 1 - y[i];
    }
    const double a = RocAuc(s, y), b = RocAuc(s, f);
    EXPECT_NEAR(a + b, 1.0, 1e-12);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

// Independent percentile-bootstrap resampler: same generator and draw order,
// own mean, sort and type-7 quantile.
Interval ReferenceBootstrap(const Vec& xs, std::uint64_t seed, std::size_t reps, double level) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, xs.size() - 1);
  Vec means;
  for (std::size_t r = 0; r < reps; ++r) {
    long double sum = 0;
    std::vector<std::size_t> idx(xs.size());
    for (auto& i : idx) i = pick(rng);
    for (auto i : idx) sum += xs[i];
    means.push_back(static_cast<double>(sum / xs.size()));
  }
  std::sort(means.begin(), means.end());
  auto q = [&](double p) {
    const double h = (means.size() - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, means.size() - 1);
    return means[lo] + (h - lo) * (means[hi] - means[lo]);
  };
  const double tail = (1 - level) / 2;
  return {q(tail), q(1 - tail)};
}

TEST(Bootstrap, ConstantSamples) {
  Vec c(25, 3.5);
  auto ci = BootstrapMeanCi(c);
  EXPECT_EQ(ci.low, 3.5);
  EXPECT_EQ(ci.high, 3.5);
}

TEST(Bootstrap, MatchesReferenceResampler) {
  std::mt19937_64 gen(77);
  std::normal_distribution<double> n;
  Vec xs(100);
  for (auto& v : xs) v = n(gen);
  BootstrapOptions o;
  o.seed = 1234;
  auto got = BootstrapMeanCi(xs, o);
  auto want = ReferenceBootstrap(xs, 1234, o.n_resamples, 0.95);
  EXPECT_NEAR(got.low, want.low, 1e-12);
  EXPECT_NEAR(got.high, want.high, 1e-12);
}

TEST(Bootstrap, DeterministicAndNested) {
  Vec xs;
  for (int i = 0; i < 40; ++i) xs.push_back(std::sin(i * 1.7) + i * 0.01);
  BootstrapOptions o95, o90;
  o90.level = 0.90;
  EXPECT_EQ(BootstrapMeanCi(xs, o95), BootstrapMeanCi(xs, o95));
  auto a = BootstrapMeanCi(xs, o95), b = BootstrapMeanCi(xs, o90);
  EXPECT_LE(a.low, b.low);
  EXPECT_GE(a.high, b.high);
  EXPECT_EQ(CodeOf([] { BootstrapMeanCi(Vec{}); }), ErrorCode::kEmptySeries);
}

TEST(PairedTTest, ReferenceFixture) {
  Vec a = {2.1, 3.4, 1.9, 5.6, 4.2, 3.3, 2.8}, b = {1.8, 3.0, 2.2, 4.9, 3.6, 3.5, 2.1};
  auto r = PairedTTest(a, b, 3);
  EXPECT_NEAR(r.t, kPairedT, 1e-9);
  EXPECT_NEAR(r.p_raw, kPairedP, 1e-6);
  EXPECT_NEAR(r.p_bonferroni, std::min(1.0, 3 * kPairedP), 1e-6);
  EXPECT_EQ(r.df, 6.0);
  EXPECT_NEAR(PairedTTest(a, b, 20).p_bonferroni, 1.0, 0);
}

TEST(PairedTTest, ZeroVariance) {
  Vec a = {1, 2, 3};
  EXPECT_EQ(CodeOf([&] { PairedTTest(a, a); }), ErrorCode::kZeroVariance);
  Vec b = {2, 3, 4};
  EXPECT_EQ(CodeOf([&] { PairedTTest(a, b); }), ErrorCode::kZeroVariance);
  EXPECT_EQ(CodeOf([&] { PairedTTest(Vec{1}, Vec{2}); }), ErrorCode::kTooFewSamples);
}

struct Synthetic {
  IVec y;
  Vec x1, x2;
};

Synthetic MakeLogit(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm;
  std::uniform_real_distribution<double> u;
  Synthetic s;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = norm(rng), b = norm(rng);
    const double p = 1.0 / (1.0 + std::exp(-(-0.5 + 1.5 * a - 2.0 * b)));
    s.x1.push_back(a);
    s.x2.push_back(b);
    s.y.push_back(u(rng) < p ? 1 : 0);
  }
  return s;
}

TEST(Logistic, RecoversGeneratingCoefficients) {
  auto s = MakeLogit(5000, 20240601);
  auto fit = FitLogistic(s.y, {s.x1, s.x2}, {"x1", "x2"});
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.intercept.beta, -0.5, 0.15);
  EXPECT_NEAR(fit.Find("x1")->beta, 1.5, 0.15);
  EXPECT_NEAR(fit.Find("x2")->beta, -2.0, 0.15);
  EXPECT_LT(fit.aic, fit.aic_null);
  EXPECT_EQ(fit.n, 5000u);
  for (const auto& c : fit.coefficients) {
    EXPECT_DOUBLE_EQ(c.odds_ratio, std::exp(c.beta));
    EXPECT_LE(c.ci95.low, c.ci95.high);
    EXPECT_LT(c.p_value, 1e-6);
  }
  EXPECT_GE(fit.accuracy, 0.0);
  EXPECT_LE(fit.accuracy, 1.0);
  EXPECT_GT(fit.auc, 0.8);
  EXPECT_LE(fit.auc_ci95.low, fit.auc);
  EXPECT_GE(fit.auc_ci95.high, fit.auc);
  EXPECT_GT(fit.tjur_r2, 0.0);
}

TEST(Logistic, SignEquivarianceIsExact) {
  auto s = MakeLogit(800, 3);
  Vec neg = s.x2;
  for (auto& v : neg) v = -v;
  auto a = FitLogistic(s.y, {s.x1, s.x2}, {"x1", "x2"});
  auto b = FitLogistic(s.y, {s.x1, neg}, {"x1", "x2"});
  EXPECT_EQ(a.coefficients[1].beta, -b.coefficients[1].beta);
  EXPECT_EQ(a.coefficients[0].beta, b.coefficients[0].beta);
  EXPECT_EQ(a.intercept.beta, b.intercept.beta);
}

TEST(Logistic, SeparableDataAucOneAndSeparationError) {
  Vec x;
  IVec y;
  for (int i = 0; i < 60; ++i) {
    x.push_back(i - 29.5);
    y.push_back(i >= 30);
  }
  EXPECT_EQ(RocAuc(x, y), 1.0);
  EXPECT_EQ(CodeOf([&] { FitLogistic(y, {x}, {"x"}); }), ErrorCode::kSeparation);
}

TEST(Logistic, ConstantOutcomeAndRankDeficiency) {
  IVec y(20, 1);
  Vec x(20);
  for (int i = 0; i < 20; ++i) x[i] = i;
  EXPECT_EQ(CodeOf([&] { FitLogistic(y, {x}, {"x"}); }), ErrorCode::kSeparation);
  IVec y2;
  for (int i = 0; i < 20; ++i) y2.push_back(i % 3 == 0);
  EXPECT_EQ(CodeOf([&] { FitLogistic(y2, {x, x}, {"a", "b"}); }), ErrorCode::kRankDeficient);
  EXPECT_EQ(CodeOf([&] { FitLogistic(y2, {Vec(20, 2.0)}, {"c"}); }), ErrorCode::kRankDeficient);
}

TEST(OutcomeModels, ReasonFilterMatchingAllRowsEqualsBaseline) {
  Corpus c = fixtures::RandomCorpus(31, 40, 15, {"a", "b"});
  for (auto& a : c.annotations) a.reasons.insert(Reason::kLogical);
  auto fits = ConditionedOutcomeModels(c, WeightConfig{}, Reason::kLogical);
  EXPECT_EQ(fits.baseline.intercept.beta, fits.conditioned.intercept.beta);
  EXPECT_EQ(fits.baseline.coefficients[0].beta, fits.conditioned.coefficients[0].beta);
  EXPECT_EQ(fits.baseline.auc, fits.conditioned.auc);
}

TEST(OutcomeModels, ReasonFilterMatchingNoRowsThrows) {
  Corpus c = fixtures::RandomCorpus(31, 10, 10, {"a"});
  for (auto& a : c.annotations) a.reasons = {Reason::kLogical};
  EXPECT_EQ(CodeOf([&] { ConditionedOutcomeModels(c, WeightConfig{}, Reason::kEmotional); }),
            ErrorCode::kOneClassOnly);
}

TEST(OutcomeModels, DatasetRowsCarryBatPat) {
  Corpus c = LoadCorpus(fixtures::DataDir() / "four_turn.json");
  auto data = BuildOutcomeDataset(c, WeightConfig{}, {"alice"});
  ASSERT_EQ(data.size(), 4u);
  EXPECT_EQ(data.bat, (Vec{1, 0.5, 0.4, 0}));
  EXPECT_EQ(data.pat, (Vec{0, 0, 1, 0.5}));
  EXPECT_EQ(data.y, (IVec{1, 1, 0, 1}));
  EXPECT_EQ(FilterByReason(data, Reason::kLogical).size(), 2u);
}

TEST(Agreement, IdenticalRatersArePerfect) {
  Corpus c = fixtures::RandomCorpus(5, 12, 12, {"a"});
  auto copy = c.annotations;
  for (auto& a : copy) a.annotator_id = "b";
  c.annotations.insert(c.annotations.end(), copy.begin(), copy.end());
  FinalizeCorpus(c);
  auto r = AgreementAmongRaters(c, {}, WeightConfig{});
  for (const char* m : {"bat", "pat", "nrbat"}) EXPECT_NEAR(r.spearman.at(m)->rho, 1.0, 1e-12);
  EXPECT_EQ(*r.cohen_kappa_commitment, 1.0);
  for (const char* m : {"rel", "man", "qual"}) EXPECT_EQ(*r.randolph_kappa.at(m), 1.0);
  EXPECT_EQ(r.consistency_tpr, 1.0);
  EXPECT_EQ(*r.outcome_kappa, 1.0);
  EXPECT_EQ(*r.reasons_jaccard, 1.0);
  EXPECT_EQ(r.excluded_items, 0u);
}

TEST(Agreement, ShuffledCommitmentsNearChance) {
  Corpus c = fixtures::RandomCorpus(6, 50, 12, {"a"});
  auto copy = c.annotations;
  std::mt19937_64 rng(99);
  std::vector<CommitmentType> pool;
  for (const auto& a : copy) pool.push_back(a.commitment);
  std::shuffle(pool.begin(), pool.end(), rng);
  for (std::size_t i = 0; i < copy.size(); ++i) {
    copy[i].annotator_id = "b";
    copy[i].commitment = pool[i];
  }
  c.annotations.insert(c.annotations.end(), copy.begin(), copy.end());
  FinalizeCorpus(c);
  ASSERT_GE(copy.size(), 300u);
  auto r = AgreementAmongRaters(c, {}, WeightConfig{});
  EXPECT_LT(std::fabs(*r.cohen_kappa_commitment), 0.1);
}

TEST(Agreement, ThreeRatersPairwiseAverage) {
  Corpus c = fixtures::RandomCorpus(8, 10, 10, {"a", "b", "c"});
  auto r = AgreementAmongRaters(c, {}, WeightConfig{});
  ASSERT_EQ(r.pairs.size(), 3u);
  double mean = 0;
  for (const auto& p : r.pairs) mean += *p.commitment_kappa;
  EXPECT_NEAR(*r.cohen_kappa_commitment, mean / 3, 1e-15);
  for (const auto& [k, v] : r.randolph_kappa) {
    EXPECT_GE(*v, -1.0);
    EXPECT_LE(*v, 1.0);
  }
}

TEST(Agreement, PartialOverlapCountsExclusions) {
  Corpus c = LoadCorpus(fixtures::DataDir() / "four_turn.json");
  std::erase_if(c.annotations,
                [](const TurnAnnotation& a) { return a.annotator_id == "bob" && a.turn_index == 4; });
  auto r = AgreementAmongRaters(c, {}, WeightConfig{});
  EXPECT_EQ(r.n_items, 3u);
  EXPECT_EQ(r.excluded_items, 1u);
}

TEST(Agreement, OneRaterIsInsufficient) {
  Corpus c = LoadCorpus(fixtures::DataDir() / "four_turn_single.json");
  EXPECT_EQ(CodeOf([&] { AgreementAmongRaters(c, {}, WeightConfig{}); }),
            ErrorCode::kInsufficientData);
}

TEST(Agreement, NoSharedItems) {
  Corpus c;
  c.dialogues.push_back(fixtures::MakeDialogue("d", 2));
  c.annotations = {fixtures::Label("d", "a", 1, CommitmentType::kNeutral),
                   fixtures::Label("d", "b", 2, CommitmentType::kNeutral)};
  FinalizeCorpus(c);
  EXPECT_EQ(CodeOf([&] { AgreementAmongRaters(c, {}, WeightConfig{}); }),
            ErrorCode::kNoSharedItems);
}

TEST(EffectSize, CountsAndCorrection) {
  Vec t = {0.3, 0.5, 0.2, 0.6, 0.4, 0.4}, k = {0.1, 0.4, 0.25, 0.3, 0.4, 0.2};
  EffectSizeOptions o;
  o.n_comparisons = 8;
  auto s = SummarizeEffect("bat", t, k, o);
  EXPECT_EQ(s.wins, 4);
  EXPECT_EQ(s.loses, 1);
  EXPECT_EQ(s.ties, 1);
  EXPECT_EQ(static_cast<std::size_t>(s.wins + s.loses + s.ties), s.n);
  Vec d;
  for (std::size_t i = 0; i < t.size(); ++i) d.push_back(t[i] - k[i]);
  EXPECT_NEAR(s.delta_mu, Mean(d), 1e-15);
  EXPECT_NEAR(s.median, Median(d), 1e-15);
  EXPECT_NEAR(s.p_corrected, std::min(1.0, s.p_raw * 8), 1e-15);
  EXPECT_LE(s.ci95.low, s.delta_mu);
  EXPECT_GE(s.ci95.high, s.delta_mu);
}

TEST(EffectSize, ZeroVarianceIsNotSignificant) {
  Vec t = {1, 2, 3}, k = {0, 1, 2};
  auto s = SummarizeEffect("pat", t, k);
  EXPECT_EQ(s.p_raw, 1.0);
  EXPECT_FALSE(s.significant);
  EXPECT_EQ(s.wins, 3);
}

TEST(Report, GridRendersStarsForSignificantSpearman) {
  AgreementReport r;
  r.spearman["bat"] = RankCorrelation{0.32, 0.001};
  r.spearman["pat"] = RankCorrelation{0.21, 0.2};
  r.cohen_kappa_commitment = 0.1;
  auto grid = AgreementGrid("demo", {{"model-a", r}});
  const std::string text = grid.Render();
  EXPECT_NE(text.find("0.32*"), std::string::npos);
  EXPECT_EQ(text.find("0.21*"), std::string::npos);
  EXPECT_EQ(grid.columns.size(), 8u);
  EXPECT_EQ(grid.ToJson()["rows"].size(), 1u);
}

}  // namespace
}  // namespace cobra
