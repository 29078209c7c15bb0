#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qkdad/dataset.hpp"
#include "qkdad/matrix.hpp"

namespace qkdad::baseline {

enum class KernelKind { Linear, Rbf };

struct KernelSpec {
  KernelKind kind = KernelKind::Rbf;
  double gamma = 1.0;  // rbf only
};

const char* to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& s);  // throws ConfigError

/// rbf: exp(-gamma * ||x - y||^2); linear: <x, y>.
double kernel_eval(const KernelSpec& spec, std::span<const double> x,
                   std::span<const double> y);

/// Standard bandwidth heuristic 1 / (d * var), with var the pooled variance
/// of all matrix entries.
double default_rbf_gamma(const Matrix& train);

/// Kernel hypersphere fitted in the dual. Support coefficients live on the
/// capped simplex {0 <= alpha_i <= 1/(nu*n), sum alpha = 1}; alpha_quad
/// caches alpha^T K alpha (the ||center||^2 term of the score).
struct SvddDualModel {
  KernelSpec kernel;
  Matrix train;  // stored training vectors, normalized when a normalizer is set
  std::vector<double> alpha;
  double r_squared = 0.0;
  double alpha_quad = 0.0;
  double nu = 0.0;
  std::vector<double> objective_trace;  // dual objective after init and each step
  NormStats normalizer;                 // identity unless fitted via svdd_train

  std::size_t input_dim() const { return train.cols(); }
};

/// Maximizes the SVDD dual
///   sum_i alpha_i K_ii - sum_ij alpha_i alpha_j K_ij
/// over the capped simplex by pairwise Frank-Wolfe steps (move mass from
/// the worst eligible coordinate to the best) with exact line search. The
/// recorded dual objective is non-decreasing at every step. R^2 comes from
/// the median squared distance of the free support vectors (those strictly
/// inside the box); if none are free -- e.g. nu = 1 forces every alpha to
/// the cap -- it falls back to the largest support-vector distance so the
/// sphere encloses its support.
SvddDualModel svdd_fit(const Matrix& train, double nu, const KernelSpec& kernel,
                       std::size_t max_iters);

/// Score with the deep detector's sign convention: positive means outside
/// the sphere. K(x,x) - 2 sum_i alpha_i K(x, x_i) + alpha_quad - R^2, with
/// the model's normalizer applied to x first.
double svdd_score(const SvddDualModel& model, std::span<const double> x);

std::vector<double> svdd_score_batch(const SvddDualModel& model, const Matrix& rows);

struct SvddTrainOptions {
  double nu = 0.05;
  KernelSpec kernel{KernelKind::Rbf, 0.0};  // gamma <= 0 means "derive from data"
  std::size_t max_iters = 200000;
  NormMode norm_mode = NormMode::MinMax;
};

/// Convenience pipeline: fit a normalizer on the raw data, normalize,
/// resolve the rbf bandwidth if requested, then svdd_fit.
SvddDualModel svdd_train(const Matrix& raw_train, const SvddTrainOptions& options);

}  // namespace qkdad::baseline
