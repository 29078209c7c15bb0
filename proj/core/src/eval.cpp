#include "qkdad/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "qkdad/error.hpp"
#include "qkdad/rng.hpp"

namespace qkdad::eval {

namespace {

void check_scored_labels(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw ShapeError("evaluation: scores and labels differ in length");
  if (scores.empty()) throw DataError("evaluation: empty input");
  for (int l : labels) {
    if (l != 0 && l != 1) throw DataError("evaluation: labels must be 0 or 1");
  }
}

struct ClassCounts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

ClassCounts count_classes(std::span<const int> labels) {
  ClassCounts c;
  for (int l : labels) (l == 1 ? c.pos : c.neg) += 1;
  return c;
}

}  // namespace

ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels,
                          double tau) {
  check_scored_labels(scores, labels);
  ConfusionMatrix m;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted_positive = scores[i] > tau;
    if (labels[i] == 1) {
      predicted_positive ? ++m.tp : ++m.fn;
    } else {
      predicted_positive ? ++m.fp : ++m.tn;
    }
  }
  return m;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_scored_labels(scores, labels);
  const ClassCounts counts = count_classes(labels);
  if (counts.pos == 0 || counts.neg == 0)
    throw DataError("roc_curve: need both classes present (degenerate labels)");

  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;  // stable for determinism
  });

  RocCurve curve;
  curve.n_pos = counts.pos;
  curve.n_neg = counts.neg;
  curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  curve.fpr.push_back(0.0);
  curve.tpr.push_back(0.0);

  std::size_t cum_tp = 0, cum_fp = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    const double s = scores[idx[i]];
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == s) {
      (labels[idx[j]] == 1 ? cum_tp : cum_fp) += 1;
      ++j;
    }
    curve.thresholds.push_back(s);
    curve.fpr.push_back(static_cast<double>(cum_fp) / static_cast<double>(counts.neg));
    curve.tpr.push_back(static_cast<double>(cum_tp) / static_cast<double>(counts.pos));
    i = j;
  }
  return curve;
}

AucResult auc_trapezoid(const RocCurve& curve) {
  if (curve.size() < 2) throw DataError("auc_trapezoid: curve has no sweep steps");
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const double dx = curve.fpr[i + 1] - curve.fpr[i];
    area += dx * 0.5 * (curve.tpr[i] + curve.tpr[i + 1]);
  }
  AucResult r;
  r.auc = area;
  r.method = AucResult::Method::Trapezoid;
  r.n_pos = curve.n_pos;
  r.n_neg = curve.n_neg;
  return r;
}

AucResult auc_rank(std::span<const double> scores, std::span<const int> labels) {
  check_scored_labels(scores, labels);
  const ClassCounts counts = count_classes(labels);
  if (counts.pos == 0 || counts.neg == 0)
    throw DataError("auc_rank: need both classes present (degenerate labels)");

  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] < scores[b];
    return a < b;
  });

  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    // ranks are 1-based; tied entries share the midrank
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) pos_rank_sum += midrank;
    }
    i = j;
  }

  const double np = static_cast<double>(counts.pos);
  const double nn = static_cast<double>(counts.neg);
  AucResult r;
  r.auc = (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
  r.method = AucResult::Method::Rank;
  r.n_pos = counts.pos;
  r.n_neg = counts.neg;
  return r;
}

TrialStats repeated_eval(const BatchScorer& scorer, const TrialSetGenerator& generator,
                         std::size_t n_trials, std::uint64_t master_seed) {
  if (n_trials == 0) throw ConfigError("repeated_eval: need at least one trial");

  TrialStats stats;
  stats.auc_percent.reserve(n_trials);
  for (std::size_t trial = 0; trial < n_trials; ++trial) {
    const std::uint64_t trial_seed = derive_seed(master_seed, 0x7000 + trial);
    const Dataset set = generator(trial_seed);
    if (!set.labeled()) throw DataError("repeated_eval: trial set is unlabeled");
    const std::vector<double> scores = scorer(set.features);
    const AucResult auc = auc_rank(scores, set.labels);
    stats.auc_percent.push_back(100.0 * auc.auc);
  }

  double sum = 0.0;
  for (double a : stats.auc_percent) sum += a;
  stats.mean_percent = sum / static_cast<double>(n_trials);
  double ss = 0.0;
  for (double a : stats.auc_percent) {
    const double d = a - stats.mean_percent;
    ss += d * d;
  }
  stats.variance_percent_sq = ss / static_cast<double>(n_trials);
  return stats;
}

}  // namespace qkdad::eval
