#include <benchmark/benchmark.h>

#include "qkdad/deep_svdd.hpp"
#include "qkdad/eval.hpp"
#include "qkdad/nn.hpp"
#include "qkdad/qkd_sim.hpp"
#include "qkdad/rng.hpp"
#include "qkdad/svdd_baseline.hpp"

namespace {

using namespace qkdad;

Matrix random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform();
  return m;
}

void BM_ForwardBatch(benchmark::State& state) {
  const auto params = nn::mlp_init({400, 128, 64, 32}, 7);
  const Matrix batch = random_batch(128, 400, 11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(nn::forward(params, batch));
  }
}
BENCHMARK(BM_ForwardBatch);

void BM_LossAndBackward(benchmark::State& state) {
  const auto params = nn::mlp_init({400, 128, 64, 32}, 7);
  const Matrix batch = random_batch(128, 400, 11);
  deepsvdd::Hypersphere sphere;
  sphere.center.assign(32, 0.1);
  sphere.radius = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        deepsvdd::soft_boundary_loss(params, batch, sphere, 0.05, 1e-6, batch.rows()));
  }
}
BENCHMARK(BM_LossAndBackward);

void BM_ScoreWindow(benchmark::State& state) {
  Matrix train = random_batch(256, 400, 3);
  deepsvdd::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 5;
  const auto model = deepsvdd::train(train, cfg);
  const Matrix row = random_batch(1, 400, 17);
  for (auto _ : state) {
    benchmark::DoNotOptimize(deepsvdd::score_batch(model, row));
  }
}
BENCHMARK(BM_ScoreWindow);

void BM_AucRank(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(23);
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.uniform();
    labels[i] = static_cast<int>(rng.below(2));
  }
  labels[0] = 0;
  labels[1] = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval::auc_rank(scores, labels));
  }
}
BENCHMARK(BM_AucRank)->Arg(1000)->Arg(100000);

void BM_SvddFit(benchmark::State& state) {
  const Matrix train = random_batch(200, 16, 29);
  baseline::KernelSpec kernel{baseline::KernelKind::Rbf, 0.5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(baseline::svdd_fit(train, 0.1, kernel, 2000));
  }
}
BENCHMARK(BM_SvddFit);

void BM_GenTimestamps(benchmark::State& state) {
  sim::SimProfile profile;
  profile.seed = 31;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim::gen_timestamps_muted_attack(10, 400, profile));
  }
}
BENCHMARK(BM_GenTimestamps);

}  // namespace

BENCHMARK_MAIN();
