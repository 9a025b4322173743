// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "linpfn/task.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace linpfn {

void TabularTask::validate() const {
  if (n_train > x.rows()) throw ContractError("task: n_train exceeds row count");
  if (!columns.empty() && columns.size() != x.cols()) throw ContractError("task: column kinds do not match width");
  if (kind == TaskKind::classification) {
    if (labels.size() != x.rows())
      throw ContractError("task: " + std::to_string(labels.size()) + " labels for " + std::to_string(x.rows()) +
                          " rows");
    for (std::size_t y : labels)
      if (y >= n_classes)
        throw ContractError("task: label " + std::to_string(y) + " >= n_classes " + std::to_string(n_classes));
  } else if (targets.size() != x.rows()) {
    throw ContractError("task: " + std::to_string(targets.size()) + " targets for " + std::to_string(x.rows()) +
                        " rows");
  }
}

namespace {

TabularTask reorder(const TabularTask& task, std::span<const std::size_t> order, std::size_t n_train) {
  TabularTask out;
  out.x = select_rows(task.x, order);
  if (!task.labels.empty())
    for (std::size_t i : order) out.labels.push_back(task.labels[i]);
  if (!task.targets.empty())
    for (std::size_t i : order) out.targets.push_back(task.targets[i]);
  out.n_train = n_train;
  out.n_classes = task.n_classes;
  out.kind = task.kind;
  out.columns = task.columns;
  out.feature_names = task.feature_names;
  return out;
}

}  // namespace

TabularTask split_task(const TabularTask& task, std::span<const std::size_t> train_idx,
                       std::span<const std::size_t> test_idx) {
  std::vector<std::size_t> order(train_idx.begin(), train_idx.end());
  order.insert(order.end(), test_idx.begin(), test_idx.end());
  return reorder(task, order, train_idx.size());
}

TabularTask select_train_rows(const TabularTask& task, std::span<const std::size_t> train_idx) {
  for (std::size_t i : train_idx)
    if (i >= task.n_train) throw ContractError("select_train_rows: index " + std::to_string(i) + " is not a train row");
  std::vector<std::size_t> test(task.n_test());
  std::iota(test.begin(), test.end(), task.n_train);
  return split_task(task, train_idx, test);
}

TabularTask random_split(const TabularTask& task, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ContractError("test_fraction must be in [0, 1)");
  std::vector<std::size_t> order(task.rows());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(task.rows())));
  return reorder(task, order, task.rows() - n_test);
}

}  // namespace linpfn
