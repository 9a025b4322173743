// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "linpfn/matrix.hpp"

namespace linpfn {

enum class TaskKind { classification, regression };

/// Categorical columns hold raw category codes (any distinct doubles);
/// preprocessing re-encodes them by train-split vocabulary.
struct ColumnKind {
  bool categorical = false;
  std::size_t cardinality = 0;
};

/// Rows [0, n_train) form the train split, the rest the test split.
struct TabularTask {
  Matrix x;
  std::vector<std::size_t> labels;  // classification
  std::vector<double> targets;      // regression
  std::size_t n_train = 0;
  std::size_t n_classes = 0;
  TaskKind kind = TaskKind::classification;
  std::vector<ColumnKind> columns;  // empty means all numeric
  std::vector<std::string> feature_names;

  std::size_t rows() const { return x.rows(); }
  std::size_t n_test() const { return x.rows() - n_train; }
  std::size_t features() const { return x.cols(); }

  Matrix x_train() const { return row_slice(x, 0, n_train); }
  Matrix x_test() const { return row_slice(x, n_train, x.rows()); }
  std::span<const std::size_t> y_train() const { return std::span(labels).subspan(0, n_train); }
  std::span<const std::size_t> y_test() const { return std::span(labels).subspan(n_train); }

  /// Throws ContractError if sizes or label ranges are inconsistent.
  void validate() const;
};

/// Re-orders rows as train_idx followed by test_idx.
TabularTask split_task(const TabularTask& task, std::span<const std::size_t> train_idx,
                       std::span<const std::size_t> test_idx);

/// Keeps the given subset of train rows (in that order) and every test row.
TabularTask select_train_rows(const TabularTask& task, std::span<const std::size_t> train_idx);

/// Seeded random train/test split of all rows.
TabularTask random_split(const TabularTask& task, double test_fraction, std::uint64_t seed);

}  // namespace linpfn
