// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "linpfn/errors.hpp"

namespace linpfn {

/// Dense row-major matrix. Vectors are represented as 1×n or n×1 matrices.
template <typename T>
class BasicMatrix {
 public:
  using value_type = T;

  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{0})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_string(rows_, cols_));
    }
  }
  BasicMatrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DimensionError("ragged initializer list");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static BasicMatrix identity(std::size_t n) {
    BasicMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::string shape() const { return shape_string(rows_, cols_); }

  bool operator==(const BasicMatrix&) const = default;

  static std::string shape_string(std::size_t r, std::size_t c) {
    return "(" + std::to_string(r) + "x" + std::to_string(c) + ")";
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;
using MatrixF = BasicMatrix<float>;

template <typename To, typename From>
BasicMatrix<To> cast(const BasicMatrix<From>& m) {
  BasicMatrix<To> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = static_cast<To>(m[i]);
  return out;
}

/// FLOPs charged for an (r×k)·(k×c) product: r·c·(2k−1).
constexpr std::uint64_t matmul_flops(std::uint64_t r, std::uint64_t k, std::uint64_t c) {
  return k == 0 ? 0 : r * c * (2 * k - 1);
}

namespace detail {

inline void require_same_shape(const auto& a, const auto& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape() + " vs " + b.shape());
  }
}

}  // namespace detail

/// a·b. Each output row depends only on the matching row of `a`, so row
/// results are bit-identical regardless of how many rows are batched.
template <typename T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: shape mismatch " + a.shape() + " x " + b.shape());
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  BasicMatrix<T> out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    T* __restrict o = out.data() + i * m;
    const T* ai = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T s = ai[p];
      const T* __restrict bp = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += s * bp[j];
    }
  }
  return out;
}

/// aᵀ·b without materializing the transpose.
template <typename T>
BasicMatrix<T> matmul_tn(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: shape mismatch " + a.shape() + "^T x " + b.shape());
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  BasicMatrix<T> out(k, m);
  for (std::size_t r = 0; r < n; ++r) {
    const T* ar = a.data() + r * k;
    const T* __restrict br = b.data() + r * m;
    for (std::size_t i = 0; i < k; ++i) {
      const T s = ar[i];
      T* __restrict o = out.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += s * br[j];
    }
  }
  return out;
}

template <typename T>
BasicMatrix<T> transpose(const BasicMatrix<T>& a);

/// a·bᵀ. Goes through an explicit transpose of b so the inner loop stays a
/// contiguous axpy; output rows still depend only on the matching row of a.
template <typename T>
BasicMatrix<T> matmul_nt(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: shape mismatch " + a.shape() + " x " + b.shape() + "^T");
  }
  return matmul(a, transpose(b));
}

template <typename T>
BasicMatrix<T> transpose(const BasicMatrix<T>& a) {
  BasicMatrix<T> out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

template <typename T>
BasicMatrix<T> operator+(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  detail::require_same_shape(a, b, "add");
  BasicMatrix<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

template <typename T>
BasicMatrix<T> operator-(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  detail::require_same_shape(a, b, "sub");
  BasicMatrix<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

template <typename T>
BasicMatrix<T> operator*(const BasicMatrix<T>& a, T s) {
  BasicMatrix<T> out = a;
  for (auto& x : out.values()) x *= s;
  return out;
}

template <typename T>
BasicMatrix<T> hadamard(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  detail::require_same_shape(a, b, "hadamard");
  BasicMatrix<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

/// Adds a 1×c row vector to every row.
template <typename T>
BasicMatrix<T> add_row(const BasicMatrix<T>& a, const BasicMatrix<T>& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    throw DimensionError("add_row: bias " + bias.shape() + " does not broadcast over " + a.shape());
  }
  BasicMatrix<T> out = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) += bias[j];
  return out;
}

/// Rows [begin, end).
template <typename T>
BasicMatrix<T> row_slice(const BasicMatrix<T>& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.rows()) {
    throw DimensionError("row_slice [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") out of range for " + a.shape());
  }
  std::vector<T> d(a.data() + begin * a.cols(), a.data() + end * a.cols());
  return BasicMatrix<T>(end - begin, a.cols(), std::move(d));
}

/// Columns [begin, end).
template <typename T>
BasicMatrix<T> col_slice(const BasicMatrix<T>& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.cols()) {
    throw DimensionError("col_slice [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") out of range for " + a.shape());
  }
  BasicMatrix<T> out(a.rows(), end - begin);
  for (std::size_t i = 0; i < a.rows(); ++i)
    std::copy(a.data() + i * a.cols() + begin, a.data() + i * a.cols() + end,
              out.data() + i * out.cols());
  return out;
}

template <typename T>
BasicMatrix<T> select_rows(const BasicMatrix<T>& a, std::span<const std::size_t> idx) {
  BasicMatrix<T> out(idx.size(), a.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= a.rows()) throw DimensionError("select_rows: index out of range");
    std::copy_n(a.data() + idx[i] * a.cols(), a.cols(), out.data() + i * a.cols());
  }
  return out;
}

template <typename T>
BasicMatrix<T> vstack(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.rows() == 0) return b;
  if (b.rows() == 0) return a;
  if (a.cols() != b.cols()) throw DimensionError("vstack: " + a.shape() + " vs " + b.shape());
  std::vector<T> d(a.values().begin(), a.values().end());
  d.insert(d.end(), b.values().begin(), b.values().end());
  return BasicMatrix<T>(a.rows() + b.rows(), a.cols(), std::move(d));
}

template <typename T>
BasicMatrix<T> hstack(std::span<const BasicMatrix<T>> parts) {
  if (parts.empty()) return {};
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != parts[0].rows()) throw DimensionError("hstack: row count mismatch");
    cols += p.cols();
  }
  BasicMatrix<T> out(parts[0].rows(), cols);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    std::size_t c = 0;
    for (const auto& p : parts) {
      std::copy_n(p.data() + i * p.cols(), p.cols(), out.data() + i * cols + c);
      c += p.cols();
    }
  }
  return out;
}

/// x ↦ x+1 for x ≥ 0, exp(x) for x < 0. Strictly positive for finite input.
template <typename T>
inline T elu_plus_one(T x) {
  return x >= T{0} ? x + T{1} : std::exp(x);
}

template <typename T>
inline T elu_plus_one_derivative(T x) {
  return x >= T{0} ? T{1} : std::exp(x);
}

template <typename T>
BasicMatrix<T> elu_plus_one(const BasicMatrix<T>& x) {
  BasicMatrix<T> out = x;
  for (auto& v : out.values()) v = elu_plus_one(v);
  return out;
}

// tanh approximation of GELU
template <typename T>
inline T gelu(T x) {
  constexpr T c = T(0.7978845608028654);  // sqrt(2/pi)
  return T(0.5) * x * (T{1} + std::tanh(c * (x + T(0.044715) * x * x * x)));
}

template <typename T>
inline T gelu_derivative(T x) {
  constexpr T c = T(0.7978845608028654);
  const T u = c * (x + T(0.044715) * x * x * x);
  const T t = std::tanh(u);
  const T du = c * (T{1} + T(3 * 0.044715) * x * x);
  return T(0.5) * (T{1} + t) + T(0.5) * x * (T{1} - t * t) * du;
}

/// Row-wise softmax with max subtraction. Entries equal to -inf get weight 0.
template <typename T>
BasicMatrix<T> softmax_rows(const BasicMatrix<T>& x) {
  BasicMatrix<T> out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto in = x.row(i);
    auto o = out.row(i);
    T mx = -std::numeric_limits<T>::infinity();
    for (T v : in) mx = std::max(mx, v);
    T sum{0};
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (auto& v : o) v /= sum;
  }
  return out;
}

inline constexpr double kLayerNormEps = 1e-5;

/// Normalizes each row to zero mean and unit (population) variance, then
/// applies gain and bias (both 1×cols).
template <typename T>
BasicMatrix<T> layer_norm(const BasicMatrix<T>& x, const BasicMatrix<T>& gain,
                          const BasicMatrix<T>& bias, T eps = T(kLayerNormEps)) {
  if (gain.size() != x.cols() || bias.size() != x.cols()) {
    throw DimensionError("layer_norm: gain/bias length must equal " + std::to_string(x.cols()));
  }
  if (!(eps > T{0})) throw ContractError("layer_norm: eps must be positive");
  BasicMatrix<T> out(x.rows(), x.cols());
  const T n = static_cast<T>(x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    T mean{0};
    for (T v : r) mean += v;
    mean /= n;
    T var{0};
    for (T v : r) var += (v - mean) * (v - mean);
    var /= n;
    const T inv = T{1} / std::sqrt(var + eps);
    for (std::size_t j = 0; j < r.size(); ++j) out(i, j) = (r[j] - mean) * inv * gain[j] + bias[j];
  }
  return out;
}

template <typename T>
T frobenius_norm(const BasicMatrix<T>& a) {
  T s{0};
  for (T v : a.values()) s += v * v;
  return std::sqrt(s);
}

template <typename T>
T max_abs_diff(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  detail::require_same_shape(a, b, "max_abs_diff");
  T m{0};
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// max |a−b| / max(max |b|, tiny): relative error against a reference `b`.
template <typename T>
T max_rel_diff(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  T scale{0};
  for (T v : b.values()) scale = std::max(scale, std::abs(v));
  return max_abs_diff(a, b) / std::max(scale, std::numeric_limits<T>::min());
}

}  // namespace linpfn
