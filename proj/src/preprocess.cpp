// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "linpfn/preprocess.hpp"

#include <cmath>
#include <random>

namespace linpfn {

namespace {

double encode(const PreprocessState& s, std::size_t c, double raw) {
  if (!s.kinds[c].categorical) return raw;
  if (!std::isfinite(raw)) return raw;
  auto it = s.vocab[c].find(raw);
  return it == s.vocab[c].end() ? -1.0 : it->second;
}

}  // namespace

PreprocessState fit_preprocess(const TabularTask& task, std::size_t capacity, std::uint64_t projection_seed) {
  const std::size_t d = task.features();
  if (d == 0) throw ContractError("preprocess: task has zero feature columns");
  if (task.n_train == 0) throw ContractError("preprocess: empty train split");
  if (capacity == 0) throw ContractError("preprocess: capacity must be >= 1");
  PreprocessState s;
  s.capacity = capacity;
  s.kinds = task.columns.empty() ? std::vector<ColumnKind>(d) : task.columns;
  s.vocab.resize(d);
  for (std::size_t c = 0; c < d; ++c) {
    if (!s.kinds[c].categorical) continue;
    for (std::size_t i = 0; i < task.n_train; ++i) {
      const double raw = task.x(i, c);
      if (std::isfinite(raw) && !s.vocab[c].contains(raw))
        s.vocab[c].emplace(raw, static_cast<double>(s.vocab[c].size()));
    }
  }
  s.mean.assign(d, 0.0);
  s.std.assign(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    double sum = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < task.n_train; ++i) {
      const double v = encode(s, c, task.x(i, c));
      if (std::isfinite(v)) {
        sum += v;
        ++count;
      }
    }
    if (count == 0) continue;
    const double mean = sum / static_cast<double>(count);
    double ss = 0;
    for (std::size_t i = 0; i < task.n_train; ++i) {
      const double v = encode(s, c, task.x(i, c));
      if (std::isfinite(v)) ss += (v - mean) * (v - mean);
    }
    s.mean[c] = mean;
    s.std[c] = std::sqrt(ss / static_cast<double>(count));
  }
  if (d > capacity) {
    s.projection_seed = projection_seed;
    std::mt19937_64 rng(projection_seed);
    std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(capacity)));
    Matrix p(d, capacity);
    for (auto& v : p.values()) v = n(rng);
    s.projection = std::move(p);
  }
  return s;
}

Matrix standardize(const PreprocessState& s, const Matrix& x) {
  if (x.cols() != s.input_dim())
    throw DimensionError("preprocess: expected " + std::to_string(s.input_dim()) + " columns, got " +
                         std::to_string(x.cols()));
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double v = encode(s, c, x(i, c));
      const double z = s.std[c] > 0 ? (v - s.mean[c]) / s.std[c] : 0.0;
      out(i, c) = std::isfinite(z) ? z : 0.0;
    }
  return out;
}

Matrix apply_preprocess(const PreprocessState& s, const Matrix& x) {
  Matrix z = standardize(s, x);
  if (s.projection) z = matmul(z, *s.projection);
  const double scale = s.pad_scale();
  Matrix out(z.rows(), s.capacity);
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t c = 0; c < z.cols(); ++c) out(i, c) = z(i, c) * scale;
  return out;
}

}  // namespace linpfn
