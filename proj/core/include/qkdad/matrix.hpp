#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "qkdad/error.hpp"

namespace qkdad {

/// Dense row-major matrix of doubles.
///
/// All numeric kernels in this project run with fixed reduction orders so
/// that results are reproducible bit for bit regardless of call context
/// (single-row scoring vs. batch scoring, repeated runs with one seed).
/// Keep that invariant when touching the loops below.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m;
    m.rows_ = rows.size();
    m.cols_ = rows.size() ? rows.begin()->size() : 0;
    m.data_.reserve(m.rows_ * m.cols_);
    for (const auto& r : rows) {
      if (r.size() != m.cols_) throw ShapeError("from_rows: ragged row lengths");
      m.data_.insert(m.data_.end(), r.begin(), r.end());
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  void fill(double value) { data_.assign(data_.size(), value); }

  std::vector<double> row_copy(std::size_t r) const {
    return std::vector<double>(row(r), row(r) + cols_);
  }

  void set_row(std::size_t r, const double* src) {
    double* dst = row(r);
    for (std::size_t c = 0; c < cols_; ++c) dst[c] = src[c];
  }

  /// Sum of squared entries, fixed left-to-right order.
  double frobenius_sq() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return s;
  }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Inner product with a fixed four-lane accumulation order. The lane split
/// breaks the dependency chain (and lets the compiler pack the independent
/// lanes into SIMD registers) without reassociating the final sum, so the
/// result depends only on n, never on call context.
inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  double tail = 0.0;
  for (; k < n; ++k) tail += a[k] * b[k];
  return ((s0 + s1) + (s2 + s3)) + tail;
}

/// y += s * x over n entries. Elementwise, so vectorization cannot change
/// the result.
inline void axpy(double s, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += s * x[k];
}

/// Squared Euclidean distance, same lane discipline as dot().
inline double sq_distance(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const double d0 = a[k] - b[k];
    const double d1 = a[k + 1] - b[k + 1];
    const double d2 = a[k + 2] - b[k + 2];
    const double d3 = a[k + 3] - b[k + 3];
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  double tail = 0.0;
  for (; k < n; ++k) {
    const double d = a[k] - b[k];
    tail += d * d;
  }
  return ((s0 + s1) + (s2 + s3)) + tail;
}

}  // namespace qkdad
