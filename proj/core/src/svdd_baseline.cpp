#include "qkdad/svdd_baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qkdad::baseline {

namespace {

// relative tolerance for deciding whether a coefficient sits on a box face
constexpr double kFaceTol = 1e-8;

double kernel_raw(const KernelSpec& spec, const double* x, const double* y, std::size_t n) {
  if (spec.kind == KernelKind::Linear) return dot(x, y, n);
  return std::exp(-spec.gamma * sq_distance(x, y, n));
}

}  // namespace

const char* to_string(KernelKind kind) {
  return kind == KernelKind::Linear ? "linear" : "rbf";
}

KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "linear") return KernelKind::Linear;
  if (s == "rbf") return KernelKind::Rbf;
  throw ConfigError("unknown kernel '" + s + "' (expected linear or rbf)");
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x,
                   std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("kernel_eval: vector lengths differ");
  if (spec.kind == KernelKind::Rbf && !(spec.gamma > 0.0))
    throw ConfigError("kernel_eval: rbf bandwidth gamma must be positive");
  return kernel_raw(spec, x.data(), y.data(), x.size());
}

double default_rbf_gamma(const Matrix& train) {
  if (train.size() == 0) throw DataError("default_rbf_gamma: empty data");
  const double n = static_cast<double>(train.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < train.size(); ++i) sum += train.data()[i];
  const double mean = sum / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const double d = train.data()[i] - mean;
    ss += d * d;
  }
  const double var = ss / n;
  const double d = static_cast<double>(train.cols());
  if (var > 0.0) return 1.0 / (d * var);
  return 1.0 / d;
}

SvddDualModel svdd_fit(const Matrix& train, double nu, const KernelSpec& kernel,
                       std::size_t max_iters) {
  const std::size_t n = train.rows();
  if (n < 2) throw DataError("svdd_fit: need at least two training points");
  if (!(nu > 0.0) || nu > 1.0) throw ConfigError("svdd_fit: nu must be in (0, 1]");
  if (nu * static_cast<double>(n) < 1.0 - 1e-12)
    throw ConfigError("svdd_fit: nu*n must be at least 1 for a feasible box");
  if (max_iters == 0) throw ConfigError("svdd_fit: iteration budget must be positive");
  if (kernel.kind == KernelKind::Rbf && !(kernel.gamma > 0.0))
    throw ConfigError("svdd_fit: rbf bandwidth gamma must be positive");

  const double cap = 1.0 / (nu * static_cast<double>(n));
  const std::size_t d = train.cols();

  // dense kernel matrix; symmetric, so rows double as columns
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = kernel_raw(kernel, train.row(i), train.row(j), d);
      k(i, j) = v;
      k(j, i) = v;
    }
  }

  SvddDualModel model;
  model.kernel = kernel;
  model.train = train;
  model.nu = nu;
  model.normalizer = NormStats::identity(d);
  model.alpha.assign(n, 1.0 / static_cast<double>(n));

  std::vector<double> k_alpha(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) k_alpha[i] = dot(k.row(i), model.alpha.data(), n);

  double lin = 0.0;
  for (std::size_t i = 0; i < n; ++i) lin += model.alpha[i] * k(i, i);
  double quad = dot(model.alpha.data(), k_alpha.data(), n);
  double objective = lin - quad;
  model.objective_trace.push_back(objective);

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    // gradient of the dual is K_ii - 2 (K alpha)_i
    std::size_t src = n, dst = n;
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double g = k(i, i) - 2.0 * k_alpha[i];
      if (model.alpha[i] < cap && g > g_max) {
        g_max = g;
        dst = i;
      }
      if (model.alpha[i] > 0.0 && g < g_min) {
        g_min = g;
        src = i;
      }
    }
    if (dst == n || src == n || dst == src) break;  // box forces the current point

    const double gap = g_max - g_min;
    if (gap <= 1e-12 * (1.0 + std::abs(objective))) break;

    const double t_max = std::min(cap - model.alpha[dst], model.alpha[src]);
    if (!(t_max > 0.0)) break;
    const double curvature = k(dst, dst) - 2.0 * k(dst, src) + k(src, src);
    double t = t_max;
    if (curvature > 0.0) t = std::min(t_max, gap / (2.0 * curvature));

    model.alpha[dst] += t;
    model.alpha[src] -= t;
    if (model.alpha[dst] > cap) model.alpha[dst] = cap;
    if (model.alpha[src] < 0.0) model.alpha[src] = 0.0;

    const double* col_dst = k.row(dst);
    const double* col_src = k.row(src);
    for (std::size_t i = 0; i < n; ++i) k_alpha[i] += t * (col_dst[i] - col_src[i]);

    objective += t * gap - t * t * curvature;
    model.objective_trace.push_back(objective);
  }

  // refresh the cached products once; the incremental updates above carry
  // a little round-off after many steps
  for (std::size_t i = 0; i < n; ++i) k_alpha[i] = dot(k.row(i), model.alpha.data(), n);
  quad = dot(model.alpha.data(), k_alpha.data(), n);
  model.alpha_quad = quad;

  // squared distance of training point i to the center, in kernel space
  auto sq_dist = [&](std::size_t i) { return k(i, i) - 2.0 * k_alpha[i] + quad; };

  std::vector<double> free_dists;
  double support_max = 0.0;
  bool any_support = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (model.alpha[i] > kFaceTol * cap) {
      any_support = true;
      support_max = std::max(support_max, sq_dist(i));
      if (model.alpha[i] < cap * (1.0 - kFaceTol)) free_dists.push_back(sq_dist(i));
    }
  }

  double r_sq;
  if (!free_dists.empty()) {
    std::sort(free_dists.begin(), free_dists.end());
    r_sq = free_dists[free_dists.size() / 2];
    if (free_dists.size() % 2 == 0)
      r_sq = 0.5 * (free_dists[free_dists.size() / 2 - 1] + free_dists[free_dists.size() / 2]);
  } else {
    // every coefficient sits on the cap (nu = 1): enclose the support
    r_sq = any_support ? support_max : 0.0;
  }
  model.r_squared = std::max(r_sq, 0.0);
  return model;
}

double svdd_score(const SvddDualModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim())
    throw ShapeError("svdd_score: input length does not match model dimension");
  const auto normed = apply_normalizer(model.normalizer, x);
  const std::size_t n = model.train.rows();
  const std::size_t d = model.train.cols();
  const double kxx = kernel_raw(model.kernel, normed.data(), normed.data(), d);
  double cross = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    cross += model.alpha[i] * kernel_raw(model.kernel, normed.data(), model.train.row(i), d);
  return kxx - 2.0 * cross + model.alpha_quad - model.r_squared;
}

std::vector<double> svdd_score_batch(const SvddDualModel& model, const Matrix& rows) {
  std::vector<double> scores(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i)
    scores[i] = svdd_score(model, std::span<const double>(rows.row(i), rows.cols()));
  return scores;
}

SvddDualModel svdd_train(const Matrix& raw_train, const SvddTrainOptions& options) {
  NormStats stats = fit_normalizer(raw_train, options.norm_mode);
  const Matrix data = apply_normalizer(stats, raw_train);
  KernelSpec kernel = options.kernel;
  if (kernel.kind == KernelKind::Rbf && !(kernel.gamma > 0.0))
    kernel.gamma = default_rbf_gamma(data);
  SvddDualModel model = svdd_fit(data, options.nu, kernel, options.max_iters);
  model.normalizer = stats;
  return model;
}

}  // namespace qkdad::baseline
