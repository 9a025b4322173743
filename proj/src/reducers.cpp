// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "linpfn/data_efficiency.hpp"

namespace linpfn {

std::string_view to_string(ReducerMethod m) {
  switch (m) {
    case ReducerMethod::pca: return "pca";
    case ReducerMethod::svd: return "svd";
    case ReducerMethod::random_projection: return "random_projection";
  }
  return "?";
}

ReducerMethod parse_reducer_method(std::string_view s) {
  for (ReducerMethod m : {ReducerMethod::pca, ReducerMethod::svd, ReducerMethod::random_projection})
    if (s == to_string(m)) return m;
  throw ContractError("unknown reducer '" + std::string(s) + "' (expected pca, svd, random_projection)");
}

namespace {

// Top-k eigenvectors of XᵀX are the top-k right singular vectors of X.
void fit_spectral(const Matrix& x, std::size_t k, ReducerState& st) {
  const auto n = static_cast<Eigen::Index>(x.rows()), d = static_cast<Eigen::Index>(x.cols());
  Eigen::MatrixXd a(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      a(i, j) = x(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) -
                (st.mean.empty() ? 0.0 : st.mean[static_cast<std::size_t>(j)]);
  const Eigen::MatrixXd gram = a.transpose() * a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  if (es.info() != Eigen::Success) throw Error("reducer: eigendecomposition failed");
  const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
  const Eigen::MatrixXd& vec = es.eigenvectors();
  st.basis = Matrix(x.cols(), k);
  double total = 0, kept = 0;
  for (Eigen::Index j = 0; j < d; ++j) total += std::max(0.0, ev(j));
  for (std::size_t c = 0; c < k; ++c) {
    const Eigen::Index src = d - 1 - static_cast<Eigen::Index>(c);
    kept += std::max(0.0, ev(src));
    // sign convention: largest-magnitude component positive
    Eigen::Index arg = 0;
    vec.col(src).cwiseAbs().maxCoeff(&arg);
    const double sign = vec(arg, src) < 0 ? -1.0 : 1.0;
    for (Eigen::Index r = 0; r < d; ++r) st.basis(static_cast<std::size_t>(r), c) = sign * vec(r, src);
  }
  st.explained = total > 0 ? kept / total : 1.0;
}

}  // namespace

ReducerState fit_reducer(const Matrix& x_train, const ReducerSpec& spec) {
  if (x_train.rows() == 0 || x_train.cols() == 0) throw ContractError("fit_reducer: empty train matrix");
  if (spec.target_dim < 1 || spec.target_dim > x_train.cols())
    throw ContractError("fit_reducer: target_dim " + std::to_string(spec.target_dim) + " outside [1, " +
                        std::to_string(x_train.cols()) + "]");
  ReducerState st;
  st.spec = spec;
  const std::size_t d = x_train.cols(), k = spec.target_dim;
  switch (spec.method) {
    case ReducerMethod::pca:
      st.mean.assign(d, 0.0);
      for (std::size_t i = 0; i < x_train.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j) st.mean[j] += x_train(i, j);
      for (auto& m : st.mean) m /= static_cast<double>(x_train.rows());
      fit_spectral(x_train, k, st);
      break;
    case ReducerMethod::svd:
      fit_spectral(x_train, k, st);
      break;
    case ReducerMethod::random_projection:
      st.basis = Matrix(d, k);
      if (k == d) {
        for (std::size_t j = 0; j < d; ++j) st.basis(j, j) = 1.0;
      } else {
        std::mt19937_64 rng(spec.seed);
        std::normal_distribution<double> nd(0.0, 1.0 / std::sqrt(static_cast<double>(k)));
        for (auto& v : st.basis.values()) v = nd(rng);
      }
      break;
  }
  return st;
}

Matrix apply_reducer(const ReducerState& state, const Matrix& x) {
  if (x.cols() != state.input_dim())
    throw DimensionError("apply_reducer: expected " + std::to_string(state.input_dim()) + " columns, got " +
                         std::to_string(x.cols()));
  if (state.mean.empty()) return matmul(x, state.basis);
  Matrix c = x;
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j) c(i, j) -= state.mean[j];
  return matmul(c, state.basis);
}

TabularTask reduce_task(const TabularTask& task, const ReducerSpec& spec) {
  const ReducerState st = fit_reducer(task.x_train(), spec);
  TabularTask out = task;
  out.x = apply_reducer(st, task.x);
  out.columns.clear();
  out.feature_names.clear();
  return out;
}

}  // namespace linpfn
