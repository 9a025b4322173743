// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "linpfn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace linpfn {

std::vector<std::size_t> argmax_rows(const Matrix& proba) {
  std::vector<std::size_t> out(proba.rows());
  for (std::size_t i = 0; i < proba.rows(); ++i) {
    auto r = proba.row(i);
    out[i] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

double accuracy(const Matrix& proba, std::span<const std::size_t> labels) {
  if (proba.rows() != labels.size()) throw DimensionError("accuracy: row/label count mismatch");
  if (labels.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto pred = argmax_rows(proba);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += pred[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

double binary_auc(std::span<const double> scores, std::span<const std::size_t> labels, std::size_t positive_class) {
  if (scores.size() != labels.size()) throw DimensionError("binary_auc: size mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // sum of (tie-averaged, 1-based) ranks of the positives
  double rank_sum = 0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == positive_class) {
        rank_sum += avg_rank;
        ++n_pos;
      }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::numeric_limits<double>::quiet_NaN();
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum - np * (np + 1) / 2.0) / (np * nn);
}

double roc_auc(const Matrix& proba, std::span<const std::size_t> labels) {
  if (proba.rows() != labels.size()) throw DimensionError("roc_auc: row/label count mismatch");
  const std::size_t C = proba.cols();
  auto one_class = [&](std::size_t c) {
    std::vector<double> s(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) s[i] = proba(i, c);
    return binary_auc(s, labels, c);
  };
  if (C == 2) return one_class(1);
  double total = 0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < C; ++c) {
    const double a = one_class(c);
    if (std::isnan(a)) continue;
    total += a;
    ++used;
  }
  return used == 0 ? std::numeric_limits<double>::quiet_NaN() : total / static_cast<double>(used);
}

double r2_score(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw DimensionError("r2_score: size mismatch");
  if (truth.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  double sse = 0, sst = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    sse += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    sst += (truth[i] - mean) * (truth[i] - mean);
  }
  if (sst == 0) return sse == 0 ? 1.0 : -std::numeric_limits<double>::infinity();
  return 1.0 - sse / sst;
}

}  // namespace linpfn
