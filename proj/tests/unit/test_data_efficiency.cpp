// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "linpfn/data_efficiency.hpp"
#include "linpfn/prior.hpp"
#include "test_util.hpp"

namespace linpfn {
namespace {

double dist2(const Matrix& x, std::size_t i, std::size_t j) {
  double s = 0;
  for (std::size_t c = 0; c < x.cols(); ++c) s += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
  return s;
}

// Exhaustive optimal k-center radius.
double brute_force_radius(const Matrix& x, std::size_t k) {
  const std::size_t n = x.rows();
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), true);
  double best = INFINITY;
  do {
    std::vector<std::size_t> centers;
    for (std::size_t i = 0; i < n; ++i)
      if (pick[i]) centers.push_back(i);
    double r = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double near = INFINITY;
      for (std::size_t c : centers) near = std::min(near, std::sqrt(dist2(x, i, c)));
      r = std::max(r, near);
    }
    best = std::min(best, r);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

TEST(Reducer, FullRankPcaPreservesDistances) {
  std::mt19937_64 rng(1);
  const Matrix x = testutil::random_matrix(60, 8, rng, 2.0);
  for (auto m : {ReducerMethod::pca, ReducerMethod::svd}) {
    const ReducerState s = fit_reducer(x, {m, 8, 0});
    const Matrix z = apply_reducer(s, x);
    EXPECT_NEAR(s.explained, 1.0, 1e-12);
    for (std::size_t i = 0; i < 60; i += 3)
      for (std::size_t j = i + 1; j < 60; j += 5) EXPECT_NEAR(std::sqrt(dist2(z, i, j)), std::sqrt(dist2(x, i, j)), 1e-6);
  }
}

TEST(Reducer, PcaBasisIsOrthonormalAndCentersData) {
  std::mt19937_64 rng(2);
  Matrix x = testutil::random_matrix(80, 6, rng);
  for (std::size_t i = 0; i < 80; ++i) x(i, 3) += 10.0;
  const ReducerState s = fit_reducer(x, {ReducerMethod::pca, 3, 0});
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) {
      double dot = 0;
      for (std::size_t r = 0; r < 6; ++r) dot += s.basis(r, a) * s.basis(r, b);
      EXPECT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-10);
    }
  const Matrix z = apply_reducer(s, x);
  for (std::size_t c = 0; c < 3; ++c) {
    double m = 0;
    for (std::size_t i = 0; i < 80; ++i) m += z(i, c);
    EXPECT_NEAR(m / 80, 0.0, 1e-10);
  }
  EXPECT_LT(s.explained, 1.0);
}

TEST(Reducer, RankOnePcaExplainsEverything) {
  Matrix x(30, 4);
  const double dir[] = {1.0, -2.0, 0.5, 3.0};
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t c = 0; c < 4; ++c) x(i, c) = 0.7 * (static_cast<double>(i) - 14.5) * dir[c] + 1.0;
  const ReducerState s = fit_reducer(x, {ReducerMethod::pca, 1, 0});
  EXPECT_NEAR(s.explained, 1.0, 1e-10);
}

TEST(Reducer, RandomProjectionApproximatelyPreservesDistances) {
  std::mt19937_64 rng(3);
  const Matrix x = testutil::random_matrix(200, 100, rng);
  const ReducerState s = fit_reducer(x, {ReducerMethod::random_projection, 50, 7});
  const Matrix z = apply_reducer(s, x);
  std::size_t dist_ok = 0, sq_ok = 0, total = 0;
  double mean_ratio = 0;
  for (std::size_t i = 0; i < 200; ++i)
    for (std::size_t j = i + 1; j < 200; ++j) {
      const double ratio = dist2(z, i, j) / dist2(x, i, j);
      sq_ok += ratio >= 0.7 && ratio <= 1.3;
      dist_ok += std::sqrt(ratio) >= 0.7 && std::sqrt(ratio) <= 1.3;
      mean_ratio += ratio;
      ++total;
    }
  const double n = static_cast<double>(total);
  EXPECT_GE(dist_ok / n, 0.95);
  EXPECT_NEAR(mean_ratio / n, 1.0, 0.05);
  // squared ratios follow chi2(50)/50, which puts 0.8715 of the mass in [0.7, 1.3]
  EXPECT_NEAR(sq_ok / n, 0.8715, 0.03);
}

TEST(Reducer, RandomProjectionAtFullDimensionIsIdentity) {
  std::mt19937_64 rng(4);
  const Matrix x = testutil::random_matrix(10, 5, rng);
  const ReducerState s = fit_reducer(x, {ReducerMethod::random_projection, 5, 1});
  EXPECT_TRUE(apply_reducer(s, x) == x);
}

TEST(Reducer, FitUsesTrainRowsOnly) {
  TabularTask t = sample_blobs(60, 5, 2, 4.0, 1, 40);
  TabularTask t2 = t;
  for (std::size_t i = 40; i < 60; ++i)
    for (std::size_t c = 0; c < 5; ++c) t2.x(i, c) *= 100.0;
  const ReducerSpec spec{ReducerMethod::pca, 2, 0};
  const TabularTask a = reduce_task(t, spec), b = reduce_task(t2, spec);
  EXPECT_TRUE(row_slice(a.x, 0, 40) == row_slice(b.x, 0, 40));
  EXPECT_EQ(a.features(), 2u);
  EXPECT_TRUE(a.columns.empty());
}

TEST(Reducer, Errors) {
  const Matrix x(5, 3, 1.0);
  EXPECT_THROW(fit_reducer(x, {ReducerMethod::pca, 4, 0}), ContractError);
  EXPECT_THROW(fit_reducer(x, {ReducerMethod::pca, 0, 0}), ContractError);
  EXPECT_THROW(fit_reducer(Matrix(0, 3), {ReducerMethod::pca, 1, 0}), ContractError);
  const ReducerState s = fit_reducer(x, {ReducerMethod::svd, 2, 0});
  EXPECT_THROW(apply_reducer(s, Matrix(2, 4)), DimensionError);
  EXPECT_EQ(parse_reducer_method("svd"), ReducerMethod::svd);
  EXPECT_THROW(parse_reducer_method("ica"), Error);
}

TEST(KCenters, PicksOneRowPerSeparatedBlob) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TabularTask t = sample_blobs(100, 3, 2, 50.0, seed);
    const auto pick = k_centers(t.x, 2, seed);
    ASSERT_EQ(pick.size(), 2u);
    EXPECT_NE(t.labels[pick[0]], t.labels[pick[1]]);
    const auto rows = select_rows(t.x, t.labels, {SamplerMethod::k_centers, 2, seed});
    EXPECT_NE(t.labels[rows[0]], t.labels[rows[1]]);
  }
}

TEST(KCenters, WithinTwiceTheOptimalRadius) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> nd(4, 12), kd(1, 3);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = nd(rng), k = std::min(kd(rng), n);
    const Matrix x = testutil::random_matrix(n, 2, rng);
    const auto c = k_centers(x, k, rep);
    std::set<std::size_t> uniq(c.begin(), c.end());
    ASSERT_EQ(uniq.size(), k);
    EXPECT_LE(coverage_radius(x, c), 2.0 * brute_force_radius(x, k) + 1e-12) << "n " << n << " k " << k;
  }
}

TEST(KMedoids, ObjectiveNeverIncreases) {
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix x = testutil::random_matrix(80, 3, rng);
    const KMedoidsResult r = k_medoids(x, 5, seed);
    ASSERT_GE(r.objective.size(), 1u);
    EXPECT_LE(r.objective.size(), 11u);
    for (std::size_t i = 1; i < r.objective.size(); ++i) EXPECT_LE(r.objective[i], r.objective[i - 1] + 1e-12);
    std::set<std::size_t> uniq(r.medoids.begin(), r.medoids.end());
    EXPECT_EQ(uniq.size(), 5u);
    // the reported objective is the sum of nearest-medoid distances
    double sum = 0;
    for (std::size_t i = 0; i < 80; ++i) {
      double near = INFINITY;
      for (std::size_t m : r.medoids) near = std::min(near, std::sqrt(dist2(x, i, m)));
      sum += near;
    }
    EXPECT_NEAR(sum, r.objective.back(), 1e-9);
  }
}

TEST(KMedoids, FindsTheBlobCentresOnSeparatedData) {
  const TabularTask t = sample_blobs(90, 2, 3, 40.0, 2);
  const KMedoidsResult r = k_medoids(t.x, 3, 0);
  std::set<std::size_t> labels;
  for (std::size_t m : r.medoids) labels.insert(t.labels[m]);
  EXPECT_EQ(labels.size(), 3u);
}

TEST(Uncertainty, EntropyOracle) {
  // rows at 0, 1, 4, 9 with labels 0, 0, 1, 1
  Matrix x(4, 1);
  for (std::size_t i = 0; i < 4; ++i) x(i, 0) = static_cast<double>(i * i);
  const std::vector<std::size_t> y{0, 0, 1, 1};
  const auto h = neighbor_label_entropy(x, y, 2);
  // row 0 neighbours {1,2}: labels {0,1}; row 3 neighbours {2,1}: {1,0}
  EXPECT_NEAR(h[0], std::log(2.0), 1e-12);
  EXPECT_NEAR(h[3], std::log(2.0), 1e-12);
  // row 1 neighbours {0,2}: {0,1}; row 2 neighbours {1,3}: {0,1}
  EXPECT_NEAR(h[1], std::log(2.0), 1e-12);
  const auto h1 = neighbor_label_entropy(x, y, 1);
  EXPECT_EQ(h1[0], 0.0);
  EXPECT_EQ(h1[3], 0.0);
}

TEST(Uncertainty, UniformLabelsTieBreakByIndex) {
  std::mt19937_64 rng(6);
  const Matrix x = testutil::random_matrix(30, 3, rng);
  const std::vector<std::size_t> y(30, 1);
  for (double v : neighbor_label_entropy(x, y, 5)) EXPECT_EQ(v, 0.0);
  const auto rows = select_rows(x, y, {SamplerMethod::uncertainty, 7, 0});
  EXPECT_EQ(rows, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6}));
}

TEST(Uncertainty, PrefersRowsNearTheBoundary) {
  Matrix x(20, 1);
  std::vector<std::size_t> y(20);
  for (std::size_t i = 0; i < 20; ++i) {
    x(i, 0) = static_cast<double>(i);
    y[i] = i >= 10;
  }
  const auto rows = select_rows(x, y, {SamplerMethod::uncertainty, 2, 0, 4});
  for (std::size_t r : rows) EXPECT_TRUE(r >= 8 && r <= 11) << r;
}

class AllSamplers : public ::testing::TestWithParam<SamplerMethod> {};

TEST_P(AllSamplers, FullCountIsIdentityAndSelectionIsDeterministic) {
  const TabularTask t = sample_blobs(50, 3, 2, 4.0, 7, 40);
  const auto x = t.x_train();
  const auto all = select_rows(x, t.y_train(), {GetParam(), 40, 3});
  std::vector<std::size_t> want(40);
  std::iota(want.begin(), want.end(), 0);
  EXPECT_EQ(all, want);
  const SamplerSpec spec{GetParam(), 12, 3};
  const auto a = select_rows(x, t.y_train(), spec), b = select_rows(x, t.y_train(), spec);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 12u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), 12u);
  EXPECT_THROW(select_rows(x, t.y_train(), {GetParam(), 41, 0}), ContractError);
  EXPECT_THROW(select_rows(x, t.y_train(), {GetParam(), 0, 0}), ContractError);

  const TabularTask s = subsample_task(t, spec);
  EXPECT_EQ(s.n_train, 12u);
  EXPECT_EQ(s.n_test(), t.n_test());
  EXPECT_TRUE(s.x_test() == t.x_test());
}

INSTANTIATE_TEST_SUITE_P(Methods, AllSamplers,
                         ::testing::Values(SamplerMethod::k_centers, SamplerMethod::k_medoids,
                                           SamplerMethod::uncertainty, SamplerMethod::random),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(ZScore, ColumnsHaveZeroMeanUnitStd) {
  std::mt19937_64 rng(8);
  Matrix x = testutil::random_matrix(40, 3, rng, 5.0);
  for (std::size_t i = 0; i < 40; ++i) x(i, 2) = 4.0;
  const Matrix z = zscore_columns(x);
  for (std::size_t c = 0; c < 2; ++c) {
    double m = 0, ss = 0;
    for (std::size_t i = 0; i < 40; ++i) m += z(i, c);
    m /= 40;
    for (std::size_t i = 0; i < 40; ++i) ss += (z(i, c) - m) * (z(i, c) - m);
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(ss / 40, 1.0, 1e-12);
  }
  for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(z(i, 2), 0.0);
}

}  // namespace
}  // namespace linpfn
