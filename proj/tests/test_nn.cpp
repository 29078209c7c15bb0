#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "qkdad/nn.hpp"
#include "qkdad/rng.hpp"

using namespace qkdad;
using namespace qkdad::nn;

namespace {

Matrix random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = -1.0,
                    double hi = 1.0) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

// 0.5 * sum(latent^2); smooth in the weights away from the leaky kinks
double half_sq_loss(const NetworkParams& params, const Matrix& batch) {
  const Matrix latent = forward(params, batch);
  double s = 0.0;
  for (std::size_t i = 0; i < latent.size(); ++i) s += latent.data()[i] * latent.data()[i];
  return 0.5 * s;
}

}  // namespace

TEST_CASE("mlp_init: glorot bound is exact for a 4->2 layer") {
  const NetworkParams params = mlp_init({4, 2}, 7);
  REQUIRE(params.weights.size() == 1);
  CHECK(params.weights[0].rows() == 2);
  CHECK(params.weights[0].cols() == 4);
  // fan_in + fan_out = 6, so the bound is exactly 1
  for (std::size_t i = 0; i < params.weights[0].size(); ++i) {
    CHECK(params.weights[0].data()[i] >= -1.0);
    CHECK(params.weights[0].data()[i] <= 1.0);
  }
}

TEST_CASE("mlp_init: shapes for the wide timestamp architecture") {
  const NetworkParams params = mlp_init({400, 128, 64, 32}, 123);
  REQUIRE(params.weights.size() == 3);
  CHECK(params.weights[0].rows() == 128);
  CHECK(params.weights[0].cols() == 400);
  CHECK(params.weights[1].rows() == 64);
  CHECK(params.weights[1].cols() == 128);
  CHECK(params.weights[2].rows() == 32);
  CHECK(params.weights[2].cols() == 64);
}

TEST_CASE("mlp_init: same seed gives bitwise-identical weights") {
  const NetworkParams a = mlp_init({20, 8, 4}, 99);
  const NetworkParams b = mlp_init({20, 8, 4}, 99);
  REQUIRE(a.weights.size() == b.weights.size());
  for (std::size_t l = 0; l < a.weights.size(); ++l) CHECK(a.weights[l] == b.weights[l]);

  const NetworkParams c = mlp_init({20, 8, 4}, 100);
  CHECK_FALSE(a.weights[0] == c.weights[0]);
}

TEST_CASE("mlp_init: rejects empty and zero dims") {
  CHECK_THROWS_AS(mlp_init({}, 1), ConfigError);
  CHECK_THROWS_AS(mlp_init({5}, 1), ConfigError);
  CHECK_THROWS_AS(mlp_init({5, 0, 3}, 1), ConfigError);
}

TEST_CASE("forward: all-zero weights map anything to zero") {
  NetworkParams params = mlp_init({6, 4, 2}, 3);
  for (Matrix& w : params.weights) w.fill(0.0);
  const Matrix batch = random_batch(5, 6, 17);
  const Matrix latent = forward(params, batch);
  for (std::size_t i = 0; i < latent.size(); ++i) CHECK(latent.data()[i] == 0.0);
}

TEST_CASE("forward: hidden leaky-ReLU with identity weights") {
  NetworkParams params = mlp_init({2, 2, 2}, 5);
  for (Matrix& w : params.weights) {
    w.fill(0.0);
    w(0, 0) = 1.0;
    w(1, 1) = 1.0;
  }
  Matrix x(1, 2);
  x(0, 0) = 1.0;
  x(0, 1) = -2.0;
  const Matrix latent = forward(params, x);
  CHECK(latent(0, 0) == 1.0);
  CHECK(latent(0, 1) == doctest::Approx(-0.2).epsilon(1e-15));
}

TEST_CASE("forward: large random batch is finite and well-shaped") {
  const NetworkParams params = mlp_init({400, 128, 64, 32}, 11);
  const Matrix batch = random_batch(128, 400, 13, 0.0, 1.0);
  const Matrix latent = forward(params, batch);
  CHECK(latent.rows() == 128);
  CHECK(latent.cols() == 32);
  CHECK(latent.all_finite());
}

TEST_CASE("forward: zero input maps to zero for any parameterization") {
  // no biases anywhere and leaky(0) = 0, so the origin is a fixed point
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
    const NetworkParams params = mlp_init({7, 5, 3, 2}, seed);
    const Matrix zero(1, 7);
    const Matrix latent = forward(params, zero);
    for (std::size_t j = 0; j < latent.cols(); ++j) CHECK(latent(0, j) == 0.0);
  }
}

TEST_CASE("forward: width mismatch is a shape error") {
  const NetworkParams params = mlp_init({4, 3, 2}, 1);
  CHECK_THROWS_AS(forward(params, Matrix(2, 5)), ShapeError);
}

TEST_CASE("backward: zero latent gradient gives exactly zero weight gradients") {
  const NetworkParams params = mlp_init({6, 5, 3}, 21);
  const Matrix batch = random_batch(4, 6, 22);
  ForwardCache cache;
  forward(params, batch, &cache);
  const auto grads = backward(params, cache, Matrix(4, 3, 0.0));
  for (const Matrix& g : grads) {
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.data()[i] == 0.0);
  }
}

TEST_CASE("backward: single linear layer reduces to an outer product") {
  NetworkParams params = mlp_init({3, 2}, 33);
  Matrix x(1, 3);
  x(0, 0) = 0.5;
  x(0, 1) = -1.5;
  x(0, 2) = 2.0;
  ForwardCache cache;
  forward(params, x, &cache);
  Matrix g(1, 2);
  g(0, 0) = 2.0;
  g(0, 1) = -3.0;
  const auto grads = backward(params, cache, g);
  REQUIRE(grads.size() == 1);
  for (std::size_t j = 0; j < 2; ++j) {
    for (std::size_t k = 0; k < 3; ++k) CHECK(grads[0](j, k) == g(0, j) * x(0, k));
  }
}

TEST_CASE("backward: matches central differences on a small deep net") {
  const NetworkParams params = mlp_init({5, 4, 3}, 41);
  const Matrix batch = random_batch(3, 5, 42);

  ForwardCache cache;
  const Matrix latent = forward(params, batch, &cache);
  const auto analytic = backward(params, cache, latent);  // d(0.5*||phi||^2)/d(latent) = latent

  const auto loss = [&batch](const NetworkParams& p) { return half_sq_loss(p, batch); };
  const GradCheckResult r = grad_check(params, loss, analytic, 1e-5);
  CHECK(r.nan_count == 0);
  CHECK(r.max_rel_error < 1e-7);
}

TEST_CASE("backward: shape closure across architectures") {
  for (const auto& dims : {std::vector<std::size_t>{4, 3, 2}, {9, 6, 5, 2}, {3, 8, 8, 8, 1}}) {
    const NetworkParams params = mlp_init(dims, 55);
    const Matrix batch = random_batch(2, dims.front(), 56);
    ForwardCache cache;
    const Matrix latent = forward(params, batch, &cache);
    const auto grads = backward(params, cache, latent);
    REQUIRE(grads.size() == params.weights.size());
    for (std::size_t l = 0; l < grads.size(); ++l)
      CHECK(grads[l].same_shape(params.weights[l]));
  }
}

TEST_CASE("backward: stale cache is rejected") {
  const NetworkParams a = mlp_init({4, 3, 2}, 61);
  NetworkParams b = mlp_init({4, 3, 2}, 62);
  const Matrix batch = random_batch(2, 4, 63);
  ForwardCache cache;
  forward(a, batch, &cache);
  CHECK_THROWS_AS(backward(b, cache, Matrix(2, 2)), CacheError);

  // updating the weights invalidates previously recorded caches too
  NetworkParams c = a;
  AdamState state = AdamState::for_params(c);
  std::vector<Matrix> grads;
  for (const Matrix& w : c.weights) grads.emplace_back(w.rows(), w.cols(), 0.25);
  adam_step(c, grads, state, 0.01);
  CHECK_THROWS_AS(backward(c, cache, Matrix(2, 2)), CacheError);
}

TEST_CASE("adam_step: zero gradients leave the weights untouched") {
  NetworkParams params = mlp_init({4, 3}, 71);
  const NetworkParams before = params;
  AdamState state = AdamState::for_params(params);
  std::vector<Matrix> grads{Matrix(3, 4, 0.0)};
  adam_step(params, grads, state, 0.1);
  CHECK(params.weights[0] == before.weights[0]);
  CHECK(state.t == 1);
}

TEST_CASE("adam_step: hand-evaluated scalar step") {
  NetworkParams params;
  params.layer_dims = {1, 1};
  params.weights.emplace_back(1, 1, 1.0);
  AdamState state = AdamState::for_params(params);
  std::vector<Matrix> grads{Matrix(1, 1, 1.0)};
  adam_step(params, grads, state, 0.1);
  // m_hat = 1, v_hat = 1 after bias correction, so the step is lr/(1 + eps)
  CHECK(params.weights[0](0, 0) == doctest::Approx(0.900000001).epsilon(1e-10));
  CHECK(state.t == 1);
}

TEST_CASE("adam_step: identical runs are bitwise identical") {
  auto run = [] {
    NetworkParams params = mlp_init({6, 4, 2}, 81);
    AdamState state = AdamState::for_params(params);
    const Matrix batch = random_batch(3, 6, 82);
    for (int step = 0; step < 10; ++step) {
      ForwardCache cache;
      const Matrix latent = forward(params, batch, &cache);
      const auto grads = backward(params, cache, latent);
      adam_step(params, grads, state, 1e-3);
    }
    return params;
  };
  const NetworkParams a = run();
  const NetworkParams b = run();
  for (std::size_t l = 0; l < a.weights.size(); ++l) CHECK(a.weights[l] == b.weights[l]);
}

TEST_CASE("adam_step: non-finite gradients abort with a numeric error") {
  NetworkParams params = mlp_init({2, 2}, 91);
  AdamState state = AdamState::for_params(params);
  std::vector<Matrix> grads{Matrix(2, 2, 1.0)};
  grads[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(params, grads, state, 0.1), NumericError);
  CHECK_THROWS_AS(adam_step(params, grads, state, 0.0), ConfigError);
}

TEST_CASE("grad_check: rejects a zero step") {
  const NetworkParams params = mlp_init({3, 2}, 95);
  const auto loss = [](const NetworkParams&) { return 0.0; };
  std::vector<Matrix> analytic{Matrix(2, 3)};
  CHECK_THROWS_AS(grad_check(params, loss, analytic, 0.0), ConfigError);
  CHECK_THROWS_AS(grad_check(params, loss, analytic, -1e-5), ConfigError);
}

TEST_CASE("grad_check: quadratic loss on a linear net is near machine precision") {
  const NetworkParams params = mlp_init({4, 3}, 97);
  const Matrix batch = random_batch(5, 4, 98);
  ForwardCache cache;
  const Matrix latent = forward(params, batch, &cache);
  const auto analytic = backward(params, cache, latent);
  const auto loss = [&batch](const NetworkParams& p) { return half_sq_loss(p, batch); };
  const GradCheckResult r = grad_check(params, loss, analytic, 1e-5);
  CHECK(r.nan_count == 0);
  CHECK(r.max_rel_error < 1e-7);
}
