#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qkdad/dataset.hpp"
#include "qkdad/matrix.hpp"
#include "qkdad/nn.hpp"

namespace qkdad::deepsvdd {

/// Training knobs. Defaults: Adam at 1e-4, batches of 128, 150 epochs; the
/// boundary tolerance nu bounds the fraction of training points allowed
/// outside the sphere, and the radius is refreshed from the full training
/// set every radius_update_period epochs.
struct TrainConfig {
  double nu = 0.05;
  double weight_decay = 1e-6;
  double learning_rate = 1e-4;
  std::size_t batch_size = 128;
  std::size_t epochs = 150;
  std::size_t radius_update_period = 5;
  std::uint64_t seed = 1;
  std::vector<std::size_t> architecture;  // empty -> derived from the data width
  NormMode norm_mode = NormMode::MinMax;

  void validate() const;  // throws ConfigError
};

/// Width-dependent default architecture: wide inputs (timestamp windows)
/// get [d, 128, 64, 32], narrow ones (telemetry records) [d, 32, 16, 8].
std::vector<std::size_t> default_architecture(std::size_t input_dim);

struct Hypersphere {
  std::vector<double> center;
  double radius = 0.0;
};

/// A frozen detector: network, sphere, and the normalizer fitted on the
/// training data. Immutable after training and safe to share across
/// threads. optimizer_steps is a transient training diagnostic and is not
/// serialized.
struct DeepSvddModel {
  nn::NetworkParams params;
  Hypersphere sphere;
  NormStats normalizer;
  TrainConfig config;
  std::vector<double> loss_trace;  // mean loss per epoch
  std::size_t optimizer_steps = 0;

  std::size_t input_dim() const { return params.input_dim(); }
};

/// Mean latent vector of the training set under the initial weights, with
/// every coordinate snapped away from zero: |c_j| < 0.1 becomes +-0.1
/// (sign-preserving, zero counts as positive). Coordinates at zero would
/// let the network shrink the sphere by collapsing features.
std::vector<double> init_center(const nn::NetworkParams& params, const Matrix& train_set);

struct LossResult {
  double loss = 0.0;
  std::vector<Matrix> grads;      // includes the weight-decay term
  std::vector<double> sq_dists;   // per-point squared distance to the center
};

/// Soft-boundary objective over one batch:
///   R^2 + (1/(nu*n_batch)) * sum_i max{0, ||phi(x_i) - c||^2 - R^2}
///       + (weight_decay/2) * sum_l ||W_l||_F^2
/// R is treated as a constant here; points exactly on the boundary
/// contribute no gradient.
LossResult soft_boundary_loss(const nn::NetworkParams& params, const Matrix& batch,
                              const Hypersphere& sphere, double nu, double weight_decay,
                              std::size_t n_batch);

/// Radius from the (1-nu) nearest-rank quantile of squared distances:
/// R = sqrt of the k-th smallest with k = ceil((1-nu)*n), floored at 1.
/// Guarantees at most ceil(nu*n) points lie strictly outside R.
double update_radius(const std::vector<double>& sq_dists, double nu);

/// Full training loop: fit normalizer, init weights and center, run
/// shuffled mini-batch epochs with Adam, refresh the radius on schedule and
/// once more after the final epoch. Deterministic for a given (data,
/// config): two identical calls produce bitwise-identical models.
DeepSvddModel train(const Matrix& train_set, const TrainConfig& config);

/// Anomaly score ||phi(normalize(x)) - c||^2 - R^2. Positive means outside
/// the sphere. Implemented as a one-row batch so that batch and single
/// scoring agree bitwise.
double score(const DeepSvddModel& model, std::span<const double> x);

/// Row-wise scores; identical bit for bit to scoring each row alone.
std::vector<double> score_batch(const DeepSvddModel& model, const Matrix& rows);

enum class Verdict { Normal, Anomalous };

/// Anomalous iff score(x) > tau; tau = 0 is the sphere boundary.
Verdict classify(const DeepSvddModel& model, std::span<const double> x, double tau = 0.0);

}  // namespace qkdad::deepsvdd
