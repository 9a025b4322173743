// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference evaluations used to check the attention kernels.
// They work directly on per-pair similarities and share no code with the
// library kernels.

#pragma once

#include <cmath>
#include <cstddef>

#include "linpfn/matrix.hpp"

namespace linpfn::oracle {

inline double phi(double x) { return x >= 0 ? x + 1.0 : std::exp(x); }

inline double pair_dot(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
  double s = 0;
  for (std::size_t c = 0; c < a.cols(); ++c) s += a(i, c) * b(j, c);
  return s;
}

inline double phi_pair(const Matrix& q, std::size_t i, const Matrix& k, std::size_t j) {
  double s = 0;
  for (std::size_t c = 0; c < q.cols(); ++c) s += phi(q(i, c)) * phi(k(j, c));
  return s;
}

/// Visible keys for query i: [0, limit(i)).
template <typename Limit>
Matrix weighted_average(const Matrix& v, std::size_t n_queries, Limit limit,
                        const auto& weight, bool normalize, double eps) {
  Matrix out(n_queries, v.cols());
  for (std::size_t i = 0; i < n_queries; ++i) {
    double total = 0;
    for (std::size_t j = 0; j < limit(i); ++j) {
      const double w = weight(i, j);
      total += w;
      for (std::size_t c = 0; c < v.cols(); ++c) out(i, c) += w * v(j, c);
    }
    if (normalize)
      for (std::size_t c = 0; c < v.cols(); ++c) out(i, c) /= (total + eps);
  }
  return out;
}

/// Double loop over φ(q_i)ᵀφ(k_j); `causal` restricts to j ≤ i.
inline Matrix linear(const Matrix& q, const Matrix& k, const Matrix& v, bool normalize, bool causal,
                     double eps = 1e-6) {
  const std::size_t n = q.rows();
  auto limit = [&](std::size_t i) { return causal ? i + 1 : n; };
  auto w = [&](std::size_t i, std::size_t j) { return phi_pair(q, i, k, j); };
  return weighted_average(v, n, limit, w, normalize, eps);
}

/// Running-state recurrence: S_i = S_{i−1} + φ(k_i)v_iᵀ, o_i = φ(q_i)ᵀS_i (unnormalized).
inline Matrix causal_recurrence(const Matrix& q, const Matrix& k, const Matrix& v) {
  const std::size_t n = q.rows(), d = q.cols();
  Matrix state(d, v.cols()), out(n, v.cols());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t c = 0; c < v.cols(); ++c) state(a, c) += phi(k(i, a)) * v(i, c);
    for (std::size_t c = 0; c < v.cols(); ++c) {
      double s = 0;
      for (std::size_t a = 0; a < d; ++a) s += phi(q(i, a)) * state(a, c);
      out(i, c) = s;
    }
  }
  return out;
}

/// Direct evaluation of Σ_j exp(q_i·k_j) v_j / Σ_j exp(q_i·k_j).
inline Matrix softmax(const Matrix& q, const Matrix& k, const Matrix& v, bool causal, double scale = 1.0) {
  const std::size_t n = q.rows();
  auto limit = [&](std::size_t i) { return causal ? i + 1 : n; };
  auto w = [&](std::size_t i, std::size_t j) { return std::exp(scale * pair_dot(q, i, k, j)); };
  return weighted_average(v, n, limit, w, true, 0.0);
}

/// Two-segment attention with context truncated to the first n_train keys.
inline Matrix pfn(const Matrix& q, const Matrix& k, const Matrix& v, std::size_t n_train, bool linear_kind,
                  bool causal_train = false, double eps = 1e-6) {
  auto limit = [&](std::size_t i) { return causal_train && i < n_train ? i + 1 : n_train; };
  if (linear_kind) {
    auto w = [&](std::size_t i, std::size_t j) { return phi_pair(q, i, k, j); };
    return weighted_average(v, q.rows(), limit, w, true, eps);
  }
  auto w = [&](std::size_t i, std::size_t j) { return std::exp(pair_dot(q, i, k, j)); };
  return weighted_average(v, q.rows(), limit, w, true, 0.0);
}

}  // namespace linpfn::oracle
