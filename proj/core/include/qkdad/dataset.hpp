#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qkdad/matrix.hpp"
#include "qkdad/qkd_sim.hpp"

namespace qkdad {

enum class NormMode { MinMax, ZScore };

const char* to_string(NormMode mode);
NormMode norm_mode_from_string(const std::string& s);  // throws ConfigError

/// Per-feature normalization statistics, fitted on training data only.
/// MinMax stores (min, max) and maps each feature to [0, 1]; a constant
/// feature maps to 0.5. ZScore stores (mean, stddev) with the stddev floored
/// at 1e-12 when applied. Values outside the fitted range are intentionally
/// not clipped: leaving the unit box is itself an anomaly signal.
struct NormStats {
  NormMode mode = NormMode::MinMax;
  std::vector<double> a;  // per-feature min (MinMax) or mean (ZScore)
  std::vector<double> b;  // per-feature max (MinMax) or stddev (ZScore)

  std::size_t dim() const { return a.size(); }

  /// Stats under which apply() is the identity map.
  static NormStats identity(std::size_t dim);

  friend bool operator==(const NormStats& x, const NormStats& y) {
    return x.mode == y.mode && x.a == y.a && x.b == y.b;
  }
};

NormStats fit_normalizer(const Matrix& train, NormMode mode);

std::vector<double> apply_normalizer(const NormStats& stats, std::span<const double> x);
Matrix apply_normalizer(const NormStats& stats, const Matrix& rows);
std::vector<double> invert_normalizer(const NormStats& stats, std::span<const double> x);

/// A feature matrix with optional 0/1 labels (1 = anomalous) and a
/// provenance note describing how it was produced.
struct Dataset {
  Matrix features;
  std::vector<int> labels;  // empty when unlabeled; else one entry per row
  std::string provenance;

  std::size_t rows() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
  bool labeled() const { return !labels.empty(); }
};

/// One row per record, flattened in the canonical field order.
Dataset featurize_records(const std::vector<sim::TelemetryRecord>& records);

/// One row per window; all windows must share one size.
Dataset featurize_windows(const std::vector<sim::TimestampWindow>& windows);

/// Balanced labeled test set: min(|normal|, |anomalous|) rows from each
/// side, labels 0/1, deterministically shuffled by seed.
Dataset mix_test_set(const Dataset& normal, const Dataset& anomalous, std::uint64_t seed);

}  // namespace qkdad
