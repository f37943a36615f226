#include <cmath>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "cobra/corpus.h"
#include "cobra/metrics.h"
#include "cobra/regression.h"
#include "cobra/stats.h"

namespace {

using namespace cobra;

Dialogue MakeDialogue(int n) {
  Dialogue d;
  d.id = "bench";
  for (int i = 1; i <= n; ++i) {
    Turn t;
    t.index = i;
    t.source_index = i;
    t.question = "Q?";
    t.answer = "A.";
    d.turns.push_back(t);
  }
  return d;
}

std::vector<TurnAnnotation> MakeLabels(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> c(1, 4), r(1, 4), b(0, 1);
  std::vector<TurnAnnotation> out;
  for (int i = 1; i <= n; ++i) {
    TurnAnnotation a;
    a.dialogue_id = "bench";
    a.annotator_id = "a";
    a.turn_index = i;
    a.commitment = static_cast<CommitmentType>(c(rng));
    a.maxims = {r(rng), r(rng), b(rng), b(rng)};
    a.outcome = b(rng) ? Outcome::kWitness : Outcome::kQuestioner;
    a.reasons = {Reason::kLogical};
    out.push_back(a);
  }
  return out;
}

void BM_ScoreDialogue(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Dialogue d = MakeDialogue(n);
  const auto labels = MakeLabels(n, 1);
  const WeightConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(ScoreDialogue(d, labels, cfg));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ScoreDialogue)->Arg(20)->Arg(200)->Arg(2000);

void BM_Spearman(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> norm;
  std::vector<double> x(state.range(0)), y(state.range(0));
  for (auto& v : x) v = norm(rng);
  for (auto& v : y) v = norm(rng);
  for (auto _ : state) benchmark::DoNotOptimize(SpearmanRho(x, y));
}
BENCHMARK(BM_Spearman)->Arg(100)->Arg(10000);

void BM_FitLogistic(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> norm;
  std::uniform_real_distribution<double> u;
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> x1(n), x2(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x1[i] = norm(rng);
    x2[i] = norm(rng);
    y[i] = u(rng) < 1.0 / (1.0 + std::exp(-(-0.5 + 1.5 * x1[i] - 2.0 * x2[i])));
  }
  LogisticOptions opts;
  opts.auc_bootstrap.n_resamples = 0;
  for (auto _ : state) benchmark::DoNotOptimize(FitLogistic(y, {x1, x2}, {"x1", "x2"}, opts));
}
BENCHMARK(BM_FitLogistic)->Arg(1000)->Arg(5000);

void BM_BootstrapMeanCi(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> norm;
  std::vector<double> xs(state.range(0));
  for (auto& v : xs) v = norm(rng);
  BootstrapOptions opts;
  for (auto _ : state) benchmark::DoNotOptimize(BootstrapMeanCi(xs, opts));
}
BENCHMARK(BM_BootstrapMeanCi)->Arg(50)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
