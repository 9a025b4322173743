// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "linpfn/metrics.hpp"

namespace linpfn {
namespace {

// Pairwise definition: P(score_pos > score_neg) + 0.5 P(tie).
double pairwise_auc(const std::vector<double>& s, const std::vector<std::size_t>& y, std::size_t pos) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != pos || y[j] == pos) continue;
      den += 1;
      num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  return num / den;
}

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(r.size(), r.begin()->size());
  std::size_t i = 0;
  for (const auto& row : r) {
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

TEST(Metrics, ArgmaxAndAccuracy) {
  const Matrix p = rows({{0.1, 0.9}, {0.6, 0.4}, {0.5, 0.5}});
  EXPECT_EQ(argmax_rows(p), (std::vector<std::size_t>{1, 0, 0}));
  const std::vector<std::size_t> y{1, 1, 0};
  EXPECT_DOUBLE_EQ(accuracy(p, y), 2.0 / 3.0);
  EXPECT_THROW(accuracy(p, std::vector<std::size_t>{1}), DimensionError);
}

TEST(Metrics, PerfectBinaryAucIsOne) {
  const Matrix p = rows({{0.9, 0.1}, {0.2, 0.8}, {0.7, 0.3}, {0.4, 0.6}});
  EXPECT_DOUBLE_EQ(roc_auc(p, std::vector<std::size_t>{0, 1, 0, 1}), 1.0);
  EXPECT_DOUBLE_EQ(roc_auc(p, std::vector<std::size_t>{1, 0, 1, 0}), 0.0);
}

TEST(Metrics, BinaryAucMatchesPairwiseWithTies) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> coarse(0, 5);
  std::bernoulli_distribution coin(0.4);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> s(60);
    std::vector<std::size_t> y(60);
    for (std::size_t i = 0; i < 60; ++i) {
      s[i] = coarse(rng) / 5.0;
      y[i] = coin(rng);
    }
    y[0] = 0;
    y[1] = 1;
    EXPECT_NEAR(binary_auc(s, y, 1), pairwise_auc(s, y, 1), 1e-12);
  }
}

TEST(Metrics, MulticlassIsMacroOneVsRest) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  Matrix p(40, 3);
  std::vector<std::size_t> y(40);
  for (std::size_t i = 0; i < 40; ++i) {
    y[i] = i % 3;
    double z = 0;
    for (std::size_t k = 0; k < 3; ++k) z += p(i, k) = u(rng);
    for (std::size_t k = 0; k < 3; ++k) p(i, k) /= z;
  }
  double sum = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<double> s(40);
    for (std::size_t i = 0; i < 40; ++i) s[i] = p(i, k);
    sum += pairwise_auc(s, y, k);
  }
  EXPECT_NEAR(roc_auc(p, y), sum / 3, 1e-12);
}

TEST(Metrics, DegenerateAucIsNaN) {
  EXPECT_TRUE(std::isnan(binary_auc(std::vector<double>{0.1, 0.2}, std::vector<std::size_t>{1, 1}, 1)));
}

TEST(Metrics, RSquared) {
  const std::vector<double> truth{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(r2_score(truth, truth), 1.0);
  EXPECT_DOUBLE_EQ(r2_score(std::vector<double>(4, 2.5), truth), 0.0);
  // SSE 4, SST 5
  EXPECT_DOUBLE_EQ(r2_score(std::vector<double>{2, 3, 4, 5}, truth), 1.0 - 4.0 / 5.0);
  EXPECT_THROW(r2_score(std::vector<double>{1}, truth), DimensionError);
}

}  // namespace
}  // namespace linpfn
