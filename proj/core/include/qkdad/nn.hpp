#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qkdad/matrix.hpp"

namespace qkdad::nn {

/// Weights of a fully connected network with leaky-ReLU hidden layers, a
/// linear output layer, and no bias terms anywhere. The missing biases are
/// deliberate: a bias-free network maps the origin to the origin, which
/// blocks the constant-map degenerate solution in one-class training.
struct NetworkParams {
  std::vector<std::size_t> layer_dims;  // input dim, hidden dims..., output dim
  std::vector<Matrix> weights;          // weights[l] has shape (layer_dims[l+1], layer_dims[l])
  double leaky_slope = 0.1;

  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  std::size_t transitions() const { return weights.size(); }

  /// Cheap structural fingerprint (dims plus corner weights); used to catch
  /// stale forward caches.
  std::uint64_t fingerprint() const;
};

/// Per-batch activations recorded by forward() for use in backward().
struct ForwardCache {
  Matrix input;                    // the batch as given, rows are samples
  std::vector<Matrix> pre;         // pre-activation of every transition
  std::vector<Matrix> hidden_act;  // post-activation of hidden transitions only
  std::uint64_t params_fingerprint = 0;
};

/// Adam accumulators; shapes mirror the weights they update.
struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const NetworkParams& params);
};

/// Glorot-uniform initialization: entries of layer l drawn from
/// [-a, a] with a = sqrt(6 / (fan_in + fan_out)). Layer-by-layer,
/// row-major draw order; a given (dims, seed) pair always produces
/// bitwise-identical weights.
NetworkParams mlp_init(const std::vector<std::size_t>& layer_dims, std::uint64_t seed);

/// Batch forward pass; rows of `batch` are samples. Returns the latent
/// matrix (batch x output_dim). Pass a cache to enable backward().
Matrix forward(const NetworkParams& params, const Matrix& batch, ForwardCache* cache = nullptr);

/// Backpropagates d(loss)/d(latent) through the cached activations and
/// returns d(loss)/d(W) per layer. Regularizer terms are the caller's
/// responsibility. Throws CacheError if the cache does not belong to
/// `params`.
std::vector<Matrix> backward(const NetworkParams& params, const ForwardCache& cache,
                             const Matrix& latent_grad);

/// One Adam update with bias correction; increments state.t.
void adam_step(NetworkParams& params, const std::vector<Matrix>& grads, AdamState& state,
               double lr);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t nan_count = 0;
};

/// Central-difference check of an analytic gradient against a scalar loss
/// evaluated as a function of the weights. Relative error uses the
/// denominator max(|analytic|, |numeric|, 1e-12); entries where either side
/// is non-finite are skipped and counted.
GradCheckResult grad_check(const NetworkParams& params,
                           const std::function<double(const NetworkParams&)>& loss,
                           const std::vector<Matrix>& analytic_grads, double h);

}  // namespace qkdad::nn
