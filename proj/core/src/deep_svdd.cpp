#include "qkdad/deep_svdd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "qkdad/rng.hpp"

namespace qkdad::deepsvdd {

namespace {

constexpr std::uint64_t kStreamShuffle = 0xD5;

std::vector<double> batch_sq_dists(const Matrix& latent, const std::vector<double>& center) {
  std::vector<double> d(latent.rows());
  for (std::size_t i = 0; i < latent.rows(); ++i)
    d[i] = sq_distance(latent.row(i), center.data(), latent.cols());
  return d;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(nu > 0.0) || nu > 1.0) throw ConfigError("train config: nu must be in (0, 1]");
  if (weight_decay < 0.0) throw ConfigError("train config: weight decay must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("train config: learning rate must be > 0");
  if (batch_size < 1) throw ConfigError("train config: batch size must be >= 1");
  if (epochs < 1) throw ConfigError("train config: epochs must be >= 1");
  if (radius_update_period < 1)
    throw ConfigError("train config: radius update period must be >= 1");
}

std::vector<std::size_t> default_architecture(std::size_t input_dim) {
  if (input_dim >= 64) return {input_dim, 128, 64, 32};
  return {input_dim, 32, 16, 8};
}

std::vector<double> init_center(const nn::NetworkParams& params, const Matrix& train_set) {
  if (train_set.rows() == 0) throw DataError("init_center: empty training set");
  const Matrix latent = nn::forward(params, train_set);
  std::vector<double> c(latent.cols(), 0.0);
  for (std::size_t i = 0; i < latent.rows(); ++i) {
    const double* row = latent.row(i);
    for (std::size_t j = 0; j < c.size(); ++j) c[j] += row[j];
  }
  const double inv_n = 1.0 / static_cast<double>(latent.rows());
  for (double& v : c) v *= inv_n;
  for (double& v : c) {
    if (std::abs(v) < 0.1) v = (v >= 0.0) ? 0.1 : -0.1;
  }
  return c;
}

LossResult soft_boundary_loss(const nn::NetworkParams& params, const Matrix& batch,
                              const Hypersphere& sphere, double nu, double weight_decay,
                              std::size_t n_batch) {
  if (!(nu > 0.0)) throw ConfigError("soft_boundary_loss: nu must be positive");
  if (n_batch == 0) throw ConfigError("soft_boundary_loss: batch scale must be positive");
  if (batch.rows() == 0) throw DataError("soft_boundary_loss: empty batch");
  if (sphere.center.size() != params.output_dim())
    throw ShapeError("soft_boundary_loss: center length does not match network output");

  nn::ForwardCache cache;
  const Matrix latent = nn::forward(params, batch, &cache);
  if (!latent.all_finite())
    throw NumericError("soft_boundary_loss: non-finite latent values");

  LossResult result;
  result.sq_dists = batch_sq_dists(latent, sphere.center);

  const double r_sq = sphere.radius * sphere.radius;
  const double scale = 1.0 / (nu * static_cast<double>(n_batch));

  double hinge_sum = 0.0;
  Matrix latent_grad(latent.rows(), latent.cols());
  for (std::size_t i = 0; i < latent.rows(); ++i) {
    const double excess = result.sq_dists[i] - r_sq;
    if (excess > 0.0) {
      hinge_sum += excess;
      const double* phi = latent.row(i);
      double* g = latent_grad.row(i);
      for (std::size_t j = 0; j < latent.cols(); ++j)
        g[j] = 2.0 * (phi[j] - sphere.center[j]) * scale;
    }
  }

  result.grads = nn::backward(params, cache, latent_grad);

  double decay_sq = 0.0;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    decay_sq += params.weights[l].frobenius_sq();
    if (weight_decay != 0.0) {
      double* g = result.grads[l].data();
      const double* w = params.weights[l].data();
      for (std::size_t k = 0; k < params.weights[l].size(); ++k) g[k] += weight_decay * w[k];
    }
  }

  result.loss = r_sq + hinge_sum * scale + 0.5 * weight_decay * decay_sq;
  return result;
}

double update_radius(const std::vector<double>& sq_dists, double nu) {
  if (sq_dists.empty()) throw DataError("update_radius: no distances");
  if (!(nu > 0.0) || nu > 1.0) throw ConfigError("update_radius: nu must be in (0, 1]");
  for (double d : sq_dists) {
    if (!std::isfinite(d) || d < 0.0)
      throw DataError("update_radius: distances must be finite and nonnegative");
  }
  const std::size_t n = sq_dists.size();
  // k = ceil((1-nu)*n) computed as n - floor(nu*n); the epsilon absorbs
  // binary round-off in nu*n (0.05*100 is not exactly 5)
  std::size_t outside_budget =
      static_cast<std::size_t>(std::floor(nu * static_cast<double>(n) + 1e-9));
  if (outside_budget > n) outside_budget = n;
  std::size_t k = n - outside_budget;
  if (k < 1) k = 1;

  std::vector<double> sorted = sq_dists;
  std::sort(sorted.begin(), sorted.end());
  const double q = std::max(sorted[k - 1], 0.0);
  double r = std::sqrt(q);
  // squaring the rounded root can undershoot q by an ulp, which would let
  // quantile-tied points slip strictly outside; nudge up until R*R >= q
  while (r * r < q) r = std::nextafter(r, std::numeric_limits<double>::infinity());
  return r;
}

DeepSvddModel train(const Matrix& train_set, const TrainConfig& config) {
  config.validate();
  if (train_set.rows() == 0) throw DataError("train: empty training set");

  DeepSvddModel model;
  model.config = config;
  if (model.config.architecture.empty())
    model.config.architecture = default_architecture(train_set.cols());
  if (model.config.architecture.front() != train_set.cols())
    throw ShapeError("train: architecture input dim " +
                     std::to_string(model.config.architecture.front()) +
                     " does not match data width " + std::to_string(train_set.cols()));

  model.normalizer = fit_normalizer(train_set, config.norm_mode);
  const Matrix data = apply_normalizer(model.normalizer, train_set);

  model.params = nn::mlp_init(model.config.architecture, config.seed);
  model.sphere.center = init_center(model.params, data);
  model.sphere.radius = 0.0;

  nn::AdamState adam = nn::AdamState::for_params(model.params);
  Rng shuffle_rng = Rng::substream(config.seed, kStreamShuffle);

  const std::size_t n = data.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  model.loss_trace.reserve(config.epochs);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);

    double epoch_loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, n - start);
      Matrix batch(count, data.cols());
      for (std::size_t i = 0; i < count; ++i)
        batch.set_row(i, data.row(order[start + i]));

      LossResult step = soft_boundary_loss(model.params, batch, model.sphere, config.nu,
                                           config.weight_decay, count);
      if (!std::isfinite(step.loss))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch + 1) +
                           ", batch " + std::to_string(n_batches + 1));
      nn::adam_step(model.params, step.grads, adam, config.learning_rate);
      model.optimizer_steps += 1;
      epoch_loss_sum += step.loss;
      n_batches += 1;
    }
    model.loss_trace.push_back(epoch_loss_sum / static_cast<double>(n_batches));

    const bool scheduled = (epoch + 1) % config.radius_update_period == 0;
    const bool last = epoch + 1 == config.epochs;
    if (scheduled || last) {
      const Matrix latent = nn::forward(model.params, data);
      model.sphere.radius = update_radius(batch_sq_dists(latent, model.sphere.center),
                                          config.nu);
    }
  }
  return model;
}

std::vector<double> score_batch(const DeepSvddModel& model, const Matrix& rows) {
  if (rows.cols() != model.input_dim())
    throw ShapeError("score: input width " + std::to_string(rows.cols()) +
                     " does not match model input dim " + std::to_string(model.input_dim()));
  const double r_sq = model.sphere.radius * model.sphere.radius;
  std::vector<double> scores(rows.rows());
  Matrix one(1, rows.cols());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto normed =
        apply_normalizer(model.normalizer, std::span<const double>(rows.row(i), rows.cols()));
    one.set_row(0, normed.data());
    const Matrix latent = nn::forward(model.params, one);
    scores[i] =
        sq_distance(latent.row(0), model.sphere.center.data(), latent.cols()) - r_sq;
  }
  return scores;
}

double score(const DeepSvddModel& model, std::span<const double> x) {
  Matrix one(1, x.size());
  one.set_row(0, x.data());
  return score_batch(model, one)[0];
}

Verdict classify(const DeepSvddModel& model, std::span<const double> x, double tau) {
  if (!std::isfinite(tau)) throw ConfigError("classify: threshold must be finite");
  return score(model, x) > tau ? Verdict::Anomalous : Verdict::Normal;
}

}  // namespace qkdad::deepsvdd
