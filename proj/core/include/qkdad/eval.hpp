#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "qkdad/dataset.hpp"

namespace qkdad::eval {

/// Anomaly-positive convention throughout: label 1 (anomalous) is the
/// positive class and higher scores mean more anomalous. A scorer with the
/// opposite convention yields the same AUC after negating its scores.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fn = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;

  double tpr() const { return tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0; }
  double fpr() const { return fp + tn ? static_cast<double>(fp) / static_cast<double>(fp + tn) : 0.0; }
};

/// Predicted positive iff score > tau (strict).
ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels,
                          double tau);

/// ROC vertices swept over descending distinct scores; tied scores collapse
/// into one step. Starts at (0,0), ends at (1,1); vertex count is one more
/// than the number of distinct scores. thresholds[0] is +infinity.
struct RocCurve {
  std::vector<double> thresholds;
  std::vector<double> fpr;
  std::vector<double> tpr;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;

  std::size_t size() const { return fpr.size(); }
};

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels);

struct AucResult {
  enum class Method { Trapezoid, Rank };
  double auc = 0.0;
  Method method = Method::Trapezoid;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

/// Trapezoidal integral of the ROC curve.
AucResult auc_trapezoid(const RocCurve& curve);

/// Mann-Whitney statistic with midranks for ties:
/// (sum of positive ranks - n_pos(n_pos+1)/2) / (n_pos * n_neg).
/// Equals auc_trapezoid exactly (up to round-off) by construction.
AucResult auc_rank(std::span<const double> scores, std::span<const int> labels);

/// Per-trial AUCs in percent, with population mean/variance (divisor n,
/// percent-squared units).
struct TrialStats {
  std::vector<double> auc_percent;
  double mean_percent = 0.0;
  double variance_percent_sq = 0.0;
};

using TrialSetGenerator = std::function<Dataset(std::uint64_t trial_seed)>;
using BatchScorer = std::function<std::vector<double>(const Matrix&)>;

/// Runs n_trials independent evaluations: each trial generates a fresh
/// labeled test set from a seed derived from master_seed, scores it, and
/// takes the rank AUC. Aggregation order is fixed, so results are bitwise
/// reproducible for a given master seed.
TrialStats repeated_eval(const BatchScorer& scorer, const TrialSetGenerator& generator,
                         std::size_t n_trials, std::uint64_t master_seed);

}  // namespace qkdad::eval
