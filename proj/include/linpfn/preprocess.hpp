// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "linpfn/task.hpp"

namespace linpfn {

/// Column statistics fitted on a train split, plus the padding rule for a
/// model of the given feature capacity.
struct PreprocessState {
  std::vector<double> mean;
  std::vector<double> std;  // population std; 0 marks a constant column
  std::vector<ColumnKind> kinds;
  std::vector<std::map<double, double>> vocab;  // raw code -> ordinal, categorical columns only
  std::size_t capacity = 0;
  std::optional<Matrix> projection;  // d × capacity when d > capacity
  std::uint64_t projection_seed = 0;

  std::size_t input_dim() const { return mean.size(); }
  std::size_t output_dim() const { return capacity; }
  /// Width fed to the model before zero-padding.
  std::size_t used_dim() const { return projection ? capacity : input_dim(); }
  double pad_scale() const { return static_cast<double>(capacity) / static_cast<double>(used_dim()); }
};

/// Fits on rows [0, task.n_train). Wider inputs than `capacity` get a
/// Gaussian N(0, 1/capacity) projection drawn from `projection_seed`.
PreprocessState fit_preprocess(const TabularTask& task, std::size_t capacity, std::uint64_t projection_seed = 0);

/// Ordinal encode, z-score, zero non-finite values, project if needed, zero-pad
/// to capacity and scale by capacity / used width.
Matrix apply_preprocess(const PreprocessState& state, const Matrix& x);

/// The standardized (pre-projection, pre-padding) values only.
Matrix standardize(const PreprocessState& state, const Matrix& x);

}  // namespace linpfn
