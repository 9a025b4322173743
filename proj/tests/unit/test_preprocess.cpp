// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "linpfn/preprocess.hpp"
#include "test_util.hpp"

namespace linpfn {
namespace {

TabularTask numeric_task(Matrix x, std::size_t n_train) {
  TabularTask t;
  t.labels.assign(x.rows(), 0);
  t.x = std::move(x);
  t.n_train = n_train;
  t.n_classes = 2;
  return t;
}

TEST(Preprocess, ConstantColumnMapsToZero) {
  Matrix x(5, 2);
  for (std::size_t i = 0; i < 5; ++i) {
    x(i, 0) = 7.0;
    x(i, 1) = static_cast<double>(i);
  }
  const auto s = fit_preprocess(numeric_task(x, 4), 2);
  EXPECT_EQ(s.std[0], 0.0);
  const Matrix z = apply_preprocess(s, x);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(z(i, 0), 0.0);
}

TEST(Preprocess, ZScoreDefinition) {
  // train column {1, 3}: mean 2, population std 1
  Matrix x(3, 1);
  x(0, 0) = 1;
  x(1, 0) = 3;
  x(2, 0) = 3;
  const auto s = fit_preprocess(numeric_task(x, 2), 1);
  EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(s.std[0], 1.0);
  EXPECT_DOUBLE_EQ(standardize(s, x)(2, 0), 1.0);
  EXPECT_DOUBLE_EQ(apply_preprocess(s, x)(2, 0), 1.0);
}

TEST(Preprocess, PaddingAndScale) {
  std::mt19937_64 rng(1);
  const Matrix x = testutil::random_matrix(40, 50, rng);
  const auto s = fit_preprocess(numeric_task(x, 30), 100);
  EXPECT_FALSE(s.projection.has_value());
  EXPECT_DOUBLE_EQ(s.pad_scale(), 2.0);
  const Matrix z = standardize(s, x), p = apply_preprocess(s, x);
  ASSERT_EQ(p.cols(), 100u);
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t c = 0; c < 50; ++c) EXPECT_DOUBLE_EQ(p(i, c), 2.0 * z(i, c));
    for (std::size_t c = 50; c < 100; ++c) EXPECT_EQ(p(i, c), 0.0);
  }
}

TEST(Preprocess, FittedTrainRowsAreStandardized) {
  std::mt19937_64 rng(2);
  Matrix x = testutil::random_matrix(200, 6, rng, 3.0);
  for (std::size_t i = 0; i < 200; ++i) x(i, 2) = 5.0 + 100.0 * x(i, 2);
  const auto s = fit_preprocess(numeric_task(x, 150), 6);
  const Matrix z = standardize(s, row_slice(x, 0, 150));
  for (std::size_t c = 0; c < 6; ++c) {
    double mean = 0, ss = 0;
    for (std::size_t i = 0; i < 150; ++i) mean += z(i, c);
    mean /= 150;
    for (std::size_t i = 0; i < 150; ++i) ss += (z(i, c) - mean) * (z(i, c) - mean);
    EXPECT_LT(std::abs(mean), 1e-9);
    EXPECT_NEAR(std::sqrt(ss / 150), 1.0, 1e-6);
  }
}

TEST(Preprocess, NonFiniteBecomesZero) {
  Matrix x(4, 1);
  x(0, 0) = 1;
  x(1, 0) = std::numeric_limits<double>::quiet_NaN();
  x(2, 0) = 3;
  x(3, 0) = std::numeric_limits<double>::infinity();
  const auto s = fit_preprocess(numeric_task(x, 3), 1);
  EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
  const Matrix z = apply_preprocess(s, x);
  EXPECT_EQ(z(1, 0), 0.0);
  EXPECT_EQ(z(3, 0), 0.0);
  EXPECT_DOUBLE_EQ(z(2, 0), 1.0);
}

TEST(Preprocess, CategoricalVocabularyAndUnseenCodes) {
  Matrix x(5, 1);
  const double codes[] = {4, 9, 4, 9, 2};
  for (std::size_t i = 0; i < 5; ++i) x(i, 0) = codes[i];
  TabularTask t = numeric_task(x, 4);
  t.columns = {ColumnKind{true, 3}};
  const auto s = fit_preprocess(t, 1);
  ASSERT_EQ(s.vocab[0].size(), 2u);
  // train ordinals {0, 1, 0, 1}: mean 0.5, std 0.5; the unseen code encodes as -1
  EXPECT_DOUBLE_EQ(standardize(s, x)(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(standardize(s, x)(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(standardize(s, x)(4, 0), -3.0);
}

TEST(Preprocess, ProjectionForWideInputs) {
  std::mt19937_64 rng(3);
  const Matrix x = testutil::random_matrix(20, 30, rng);
  const auto a = fit_preprocess(numeric_task(x, 10), 8, 77);
  const auto b = fit_preprocess(numeric_task(x, 10), 8, 77);
  const auto c = fit_preprocess(numeric_task(x, 10), 8, 78);
  ASSERT_TRUE(a.projection.has_value());
  EXPECT_EQ(a.projection->rows(), 30u);
  EXPECT_EQ(a.projection->cols(), 8u);
  EXPECT_DOUBLE_EQ(a.pad_scale(), 1.0);
  EXPECT_TRUE(apply_preprocess(a, x) == apply_preprocess(b, x));
  EXPECT_FALSE(apply_preprocess(a, x) == apply_preprocess(c, x));
  // the projected output is the standardized matrix times the projection
  const Matrix z = standardize(a, x), p = apply_preprocess(a, x);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t k = 0; k < 8; ++k) {
      double s = 0;
      for (std::size_t j = 0; j < 30; ++j) s += z(i, j) * (*a.projection)(j, k);
      EXPECT_NEAR(p(i, k), s, 1e-12);
    }
}

TEST(Preprocess, Errors) {
  Matrix x(3, 2);
  EXPECT_THROW(fit_preprocess(numeric_task(x, 0), 2), ContractError);
  EXPECT_THROW(fit_preprocess(numeric_task(x, 2), 0), ContractError);
  EXPECT_THROW(fit_preprocess(numeric_task(Matrix(3, 0), 2), 2), ContractError);
  const auto s = fit_preprocess(numeric_task(x, 2), 2);
  EXPECT_THROW(apply_preprocess(s, Matrix(3, 3)), DimensionError);
}

}  // namespace
}  // namespace linpfn
