#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "sccl/errors.hpp"

namespace sccl {

// Row-major 2-D array of doubles. Rows hold instances (embeddings, centroids).
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("DenseMatrix: data length " + std::to_string(data_.size()) +
                           " does not equal " + std::to_string(rows_) + "x" +
                           std::to_string(cols_));
    }
  }
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DimensionError("DenseMatrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  [[nodiscard]] bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

inline double norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

// Rows of `m` selected by `indices`, in order.
inline DenseMatrix gather_rows(const DenseMatrix& m, std::span<const std::size_t> indices) {
  DenseMatrix out(indices.size(), m.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = m.row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

// Rows start, start+stride, start+2*stride, ...
inline DenseMatrix strided_rows(const DenseMatrix& m, std::size_t start, std::size_t stride) {
  const std::size_t n = m.rows() > start ? (m.rows() - start + stride - 1) / stride : 0;
  DenseMatrix out(n, m.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = m.row(start + i * stride);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

inline DenseMatrix interleave_rows(const DenseMatrix& even, const DenseMatrix& odd) {
  if (even.rows() != odd.rows() || even.cols() != odd.cols()) {
    throw DimensionError("interleave_rows: shape mismatch");
  }
  DenseMatrix out(2 * even.rows(), even.cols());
  for (std::size_t i = 0; i < even.rows(); ++i) {
    std::copy(even.row(i).begin(), even.row(i).end(), out.row(2 * i).begin());
    std::copy(odd.row(i).begin(), odd.row(i).end(), out.row(2 * i + 1).begin());
  }
  return out;
}

inline void add_in_place(DenseMatrix& acc, const DenseMatrix& x, double scale = 1.0) {
  if (acc.rows() != x.rows() || acc.cols() != x.cols()) {
    throw DimensionError("add_in_place: shape mismatch");
  }
  auto a = acc.values();
  const auto b = x.values();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += scale * b[i];
}

inline DenseMatrix scaled(DenseMatrix m, double s) {
  for (double& v : m.values()) v *= s;
  return m;
}

}  // namespace sccl
