#include "qkdad/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qkdad/rng.hpp"

namespace qkdad {

const char* to_string(NormMode mode) {
  return mode == NormMode::MinMax ? "minmax" : "zscore";
}

NormMode norm_mode_from_string(const std::string& s) {
  if (s == "minmax") return NormMode::MinMax;
  if (s == "zscore") return NormMode::ZScore;
  throw ConfigError("unknown normalization mode '" + s + "' (expected minmax or zscore)");
}

NormStats NormStats::identity(std::size_t dim) {
  NormStats s;
  s.mode = NormMode::MinMax;
  s.a.assign(dim, 0.0);
  s.b.assign(dim, 1.0);
  return s;
}

NormStats fit_normalizer(const Matrix& train, NormMode mode) {
  if (train.rows() == 0) throw DataError("fit_normalizer: empty training data");
  const std::size_t n = train.rows();
  const std::size_t d = train.cols();
  NormStats stats;
  stats.mode = mode;
  stats.a.resize(d);
  stats.b.resize(d);

  if (mode == NormMode::MinMax) {
    for (std::size_t c = 0; c < d; ++c) {
      double lo = train(0, c), hi = train(0, c);
      for (std::size_t r = 1; r < n; ++r) {
        lo = std::min(lo, train(r, c));
        hi = std::max(hi, train(r, c));
      }
      stats.a[c] = lo;
      stats.b[c] = hi;
    }
  } else {
    for (std::size_t c = 0; c < d; ++c) {
      double sum = 0.0;
      for (std::size_t r = 0; r < n; ++r) sum += train(r, c);
      const double mean = sum / static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double dev = train(r, c) - mean;
        ss += dev * dev;
      }
      stats.a[c] = mean;
      stats.b[c] = std::sqrt(ss / static_cast<double>(n));
    }
  }
  return stats;
}

std::vector<double> apply_normalizer(const NormStats& stats, std::span<const double> x) {
  if (x.size() != stats.dim())
    throw ShapeError("apply_normalizer: vector length does not match fitted dimension");
  std::vector<double> out(x.size());
  if (stats.mode == NormMode::MinMax) {
    for (std::size_t c = 0; c < x.size(); ++c) {
      const double range = stats.b[c] - stats.a[c];
      out[c] = range > 0.0 ? (x[c] - stats.a[c]) / range : 0.5;
    }
  } else {
    for (std::size_t c = 0; c < x.size(); ++c)
      out[c] = (x[c] - stats.a[c]) / std::max(stats.b[c], 1e-12);
  }
  return out;
}

Matrix apply_normalizer(const NormStats& stats, const Matrix& rows) {
  if (rows.cols() != stats.dim())
    throw ShapeError("apply_normalizer: matrix width does not match fitted dimension");
  Matrix out(rows.rows(), rows.cols());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    const auto v = apply_normalizer(stats, std::span<const double>(rows.row(r), rows.cols()));
    out.set_row(r, v.data());
  }
  return out;
}

std::vector<double> invert_normalizer(const NormStats& stats, std::span<const double> x) {
  if (x.size() != stats.dim())
    throw ShapeError("invert_normalizer: vector length does not match fitted dimension");
  std::vector<double> out(x.size());
  if (stats.mode == NormMode::MinMax) {
    for (std::size_t c = 0; c < x.size(); ++c) {
      const double range = stats.b[c] - stats.a[c];
      out[c] = range > 0.0 ? stats.a[c] + x[c] * range : stats.a[c];
    }
  } else {
    for (std::size_t c = 0; c < x.size(); ++c)
      out[c] = stats.a[c] + x[c] * std::max(stats.b[c], 1e-12);
  }
  return out;
}

Dataset featurize_records(const std::vector<sim::TelemetryRecord>& records) {
  if (records.empty()) throw DataError("featurize_records: no records");
  Dataset ds;
  ds.features = Matrix(records.size(), sim::TelemetryRecord::kFeatureCount);
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto f = records[r].features();
    ds.features.set_row(r, f.data());
  }
  ds.provenance = "telemetry-records n=" + std::to_string(records.size());
  return ds;
}

Dataset featurize_windows(const std::vector<sim::TimestampWindow>& windows) {
  if (windows.empty()) throw DataError("featurize_windows: no windows");
  const std::size_t width = windows.front().size();
  for (const auto& w : windows) {
    if (w.size() != width)
      throw ShapeError("featurize_windows: mixed window sizes (" + std::to_string(width) +
                       " vs " + std::to_string(w.size()) + ")");
  }
  Dataset ds;
  ds.features = Matrix(windows.size(), width);
  for (std::size_t r = 0; r < windows.size(); ++r)
    ds.features.set_row(r, windows[r].timestamps.data());
  ds.provenance = "timestamp-windows n=" + std::to_string(windows.size()) +
                  " size=" + std::to_string(width);
  return ds;
}

Dataset mix_test_set(const Dataset& normal, const Dataset& anomalous, std::uint64_t seed) {
  if (normal.rows() == 0 || anomalous.rows() == 0)
    throw DataError("mix_test_set: both classes must be nonempty");
  if (normal.dim() != anomalous.dim())
    throw ShapeError("mix_test_set: feature dimensions differ (" +
                     std::to_string(normal.dim()) + " vs " + std::to_string(anomalous.dim()) +
                     ")");

  const std::size_t m = std::min(normal.rows(), anomalous.rows());
  std::vector<std::size_t> order(2 * m);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  Dataset mixed;
  mixed.features = Matrix(2 * m, normal.dim());
  mixed.labels.resize(2 * m);
  for (std::size_t r = 0; r < order.size(); ++r) {
    const std::size_t src = order[r];
    if (src < m) {
      mixed.features.set_row(r, normal.features.row(src));
      mixed.labels[r] = 0;
    } else {
      mixed.features.set_row(r, anomalous.features.row(src - m));
      mixed.labels[r] = 1;
    }
  }
  mixed.provenance = "mix 1:1 m=" + std::to_string(m) + " [" + normal.provenance + " | " +
                     anomalous.provenance + "]";
  return mixed;
}

}  // namespace qkdad
