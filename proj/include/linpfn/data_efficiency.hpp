// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

// Pre-inference reducers: feature dimensionality reduction and train-row
// selection. Every fit sees train rows only.

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "linpfn/task.hpp"

namespace linpfn {

enum class ReducerMethod { pca, svd, random_projection };

std::string_view to_string(ReducerMethod m);
ReducerMethod parse_reducer_method(std::string_view s);

struct ReducerSpec {
  ReducerMethod method = ReducerMethod::pca;
  std::size_t target_dim = 1;
  std::uint64_t seed = 0;
};

struct ReducerState {
  ReducerSpec spec;
  std::vector<double> mean;  // empty unless pca
  Matrix basis;              // d × target_dim
  /// Share of (centered for pca) train energy kept by the basis; 1 for random projection.
  double explained = 1.0;

  std::size_t input_dim() const { return basis.rows(); }
  std::size_t output_dim() const { return basis.cols(); }
};

/// pca: top right singular vectors of the centered train matrix; svd: same on
/// the raw matrix; random_projection: N(0, 1/k) entries, or the identity when
/// target_dim equals d.
ReducerState fit_reducer(const Matrix& x_train, const ReducerSpec& spec);
Matrix apply_reducer(const ReducerState& state, const Matrix& x);

/// Fits on the train rows of `task` and maps every row.
TabularTask reduce_task(const TabularTask& task, const ReducerSpec& spec);

enum class SamplerMethod { k_centers, k_medoids, uncertainty, random };

std::string_view to_string(SamplerMethod m);
SamplerMethod parse_sampler_method(std::string_view s);

struct SamplerSpec {
  SamplerMethod method = SamplerMethod::random;
  std::size_t target_count = 1;
  std::uint64_t seed = 0;
  std::size_t neighbor_k = 10;
};

/// Sorted, unique row indices into x_train. Distances are Euclidean in the
/// z-scored train space.
std::vector<std::size_t> select_rows(const Matrix& x_train, std::span<const std::size_t> y_train,
                                     const SamplerSpec& spec);

/// Keeps the selected train rows and all test rows.
TabularTask subsample_task(const TabularTask& task, const SamplerSpec& spec);

/// Greedy farthest-first traversal from a seeded start. Indices in pick order.
std::vector<std::size_t> k_centers(const Matrix& x, std::size_t k, std::uint64_t seed);

/// Maximum distance from any row to its nearest center.
double coverage_radius(const Matrix& x, std::span<const std::size_t> centers);

struct KMedoidsResult {
  std::vector<std::size_t> medoids;
  /// Sum of distances to the nearest medoid after seeding and after each swap pass.
  std::vector<double> objective;
};

KMedoidsResult k_medoids(const Matrix& x, std::size_t k, std::uint64_t seed, std::size_t max_passes = 10);

/// Entropy of the label histogram over each row's `k` nearest other rows.
std::vector<double> neighbor_label_entropy(const Matrix& x, std::span<const std::size_t> labels, std::size_t k);

/// Column z-score by the statistics of `x` itself (constant columns map to 0).
Matrix zscore_columns(const Matrix& x);

}  // namespace linpfn
