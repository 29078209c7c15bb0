#include "qkdad/nn.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "qkdad/rng.hpp"

namespace qkdad::nn {

namespace {

void check_grad_shapes(const NetworkParams& params, const std::vector<Matrix>& grads,
                       const char* who) {
  if (grads.size() != params.weights.size())
    throw ShapeError(std::string(who) + ": gradient count does not match layer count");
  for (std::size_t l = 0; l < grads.size(); ++l) {
    if (!grads[l].same_shape(params.weights[l]))
      throw ShapeError(std::string(who) + ": gradient shape mismatch at layer " +
                       std::to_string(l));
  }
}

}  // namespace

std::uint64_t NetworkParams::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ULL;
  };
  for (std::size_t d : layer_dims) mix(d);
  mix(std::bit_cast<std::uint64_t>(leaky_slope));
  for (const Matrix& w : weights) {
    if (!w.empty()) {
      mix(std::bit_cast<std::uint64_t>(w(0, 0)));
      mix(std::bit_cast<std::uint64_t>(w(w.rows() - 1, w.cols() - 1)));
    }
  }
  return h;
}

AdamState AdamState::for_params(const NetworkParams& params) {
  AdamState s;
  s.m.reserve(params.weights.size());
  s.v.reserve(params.weights.size());
  for (const Matrix& w : params.weights) {
    s.m.emplace_back(w.rows(), w.cols());
    s.v.emplace_back(w.rows(), w.cols());
  }
  return s;
}

NetworkParams mlp_init(const std::vector<std::size_t>& layer_dims, std::uint64_t seed) {
  if (layer_dims.size() < 2)
    throw ConfigError("mlp_init: need at least an input and an output dimension");
  for (std::size_t d : layer_dims) {
    if (d == 0) throw ConfigError("mlp_init: zero layer dimension");
  }

  NetworkParams params;
  params.layer_dims = layer_dims;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const std::size_t fan_in = layer_dims[l];
    const std::size_t fan_out = layer_dims[l + 1];
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (std::size_t r = 0; r < fan_out; ++r) {
      for (std::size_t c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-a, a);
    }
    params.weights.push_back(std::move(w));
  }
  return params;
}

Matrix forward(const NetworkParams& params, const Matrix& batch, ForwardCache* cache) {
  if (params.layer_dims.size() < 2 || params.weights.empty())
    throw ConfigError("forward: network has no layers");
  if (batch.cols() != params.input_dim())
    throw ShapeError("forward: batch width " + std::to_string(batch.cols()) +
                     " does not match input dim " + std::to_string(params.input_dim()));

  const std::size_t n = batch.rows();
  const std::size_t transitions = params.transitions();
  const double slope = params.leaky_slope;

  if (cache) {
    cache->input = batch;
    cache->pre.clear();
    cache->hidden_act.clear();
    cache->params_fingerprint = params.fingerprint();
  }

  Matrix cur = batch;
  for (std::size_t l = 0; l < transitions; ++l) {
    const Matrix& w = params.weights[l];
    const std::size_t out_dim = w.rows();
    const std::size_t in_dim = w.cols();
    Matrix z(n, out_dim);
    for (std::size_t i = 0; i < n; ++i) {
      const double* x = cur.row(i);
      double* zi = z.row(i);
      for (std::size_t j = 0; j < out_dim; ++j) zi[j] = dot(x, w.row(j), in_dim);
    }
    if (cache) cache->pre.push_back(z);

    const bool hidden = l + 1 < transitions;
    if (hidden) {
      for (std::size_t i = 0; i < n; ++i) {
        double* zi = z.row(i);
        for (std::size_t j = 0; j < out_dim; ++j) {
          if (zi[j] < 0.0) zi[j] *= slope;
        }
      }
      if (cache) cache->hidden_act.push_back(z);
    }
    cur = std::move(z);
  }
  return cur;
}

std::vector<Matrix> backward(const NetworkParams& params, const ForwardCache& cache,
                             const Matrix& latent_grad) {
  if (cache.params_fingerprint != params.fingerprint())
    throw CacheError("backward: forward cache does not belong to these parameters");
  const std::size_t transitions = params.transitions();
  if (transitions == 0) throw ConfigError("backward: network has no layers");
  if (cache.pre.size() != transitions || cache.hidden_act.size() != transitions - 1)
    throw CacheError("backward: cache depth does not match network");
  const std::size_t n = cache.input.rows();
  if (latent_grad.rows() != n || latent_grad.cols() != params.output_dim())
    throw ShapeError("backward: latent gradient shape mismatch");

  std::vector<Matrix> grads;
  grads.reserve(transitions);
  for (const Matrix& w : params.weights) grads.emplace_back(w.rows(), w.cols());

  Matrix delta = latent_grad;  // output layer is linear
  for (std::size_t l = transitions; l-- > 0;) {
    const Matrix& layer_in = (l == 0) ? cache.input : cache.hidden_act[l - 1];
    const std::size_t out_dim = params.weights[l].rows();
    const std::size_t in_dim = params.weights[l].cols();

    Matrix& gw = grads[l];
    for (std::size_t i = 0; i < n; ++i) {
      const double* a = layer_in.row(i);
      const double* d = delta.row(i);
      for (std::size_t j = 0; j < out_dim; ++j) {
        if (d[j] != 0.0) axpy(d[j], a, gw.row(j), in_dim);
      }
    }

    if (l > 0) {
      Matrix dprev(n, in_dim);
      for (std::size_t i = 0; i < n; ++i) {
        const double* d = delta.row(i);
        double* dp = dprev.row(i);
        for (std::size_t j = 0; j < out_dim; ++j) {
          if (d[j] != 0.0) axpy(d[j], params.weights[l].row(j), dp, in_dim);
        }
      }
      // leaky-ReLU derivative at the recorded pre-activations; the kink at 0
      // uses the negative-side slope.
      const Matrix& z = cache.pre[l - 1];
      const double slope = params.leaky_slope;
      for (std::size_t i = 0; i < n; ++i) {
        const double* zi = z.row(i);
        double* dp = dprev.row(i);
        for (std::size_t k = 0; k < in_dim; ++k) {
          if (zi[k] <= 0.0) dp[k] *= slope;
        }
      }
      delta = std::move(dprev);
    }
  }
  return grads;
}

void adam_step(NetworkParams& params, const std::vector<Matrix>& grads, AdamState& state,
               double lr) {
  if (lr <= 0.0) throw ConfigError("adam_step: learning rate must be positive");
  check_grad_shapes(params, grads, "adam_step");
  if (state.m.size() != params.weights.size())
    throw ShapeError("adam_step: state does not match parameters");
  for (const Matrix& g : grads) {
    if (!g.all_finite())
      throw NumericError("adam_step: non-finite gradient entries (step " +
                         std::to_string(state.t + 1) + ")");
  }

  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    double* w = params.weights[l].data();
    double* m = state.m[l].data();
    double* v = state.v[l].data();
    const double* g = grads[l].data();
    const std::size_t count = params.weights[l].size();
    for (std::size_t k = 0; k < count; ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      w[k] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

GradCheckResult grad_check(const NetworkParams& params,
                           const std::function<double(const NetworkParams&)>& loss,
                           const std::vector<Matrix>& analytic_grads, double h) {
  if (h <= 0.0) throw ConfigError("grad_check: step h must be positive");
  check_grad_shapes(params, analytic_grads, "grad_check");

  NetworkParams work = params;
  GradCheckResult result;
  for (std::size_t l = 0; l < work.weights.size(); ++l) {
    Matrix& w = work.weights[l];
    for (std::size_t idx = 0; idx < w.size(); ++idx) {
      const double orig = w.data()[idx];
      w.data()[idx] = orig + h;
      const double lp = loss(work);
      w.data()[idx] = orig - h;
      const double lm = loss(work);
      w.data()[idx] = orig;

      const double numeric = (lp - lm) / (2.0 * h);
      const double analytic = analytic_grads[l].data()[idx];
      if (!std::isfinite(numeric) || !std::isfinite(analytic)) {
        ++result.nan_count;
        continue;
      }
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
      const double rel = std::abs(analytic - numeric) / denom;
      if (rel > result.max_rel_error) result.max_rel_error = rel;
    }
  }
  return result;
}

}  // namespace qkdad::nn
