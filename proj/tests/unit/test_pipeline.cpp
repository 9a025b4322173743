// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

#include "linpfn/pipeline.hpp"
#include "linpfn/trainer.hpp"

namespace linpfn {
namespace {

// Written from the branch table directly, without the thresholds struct.
ModelChoice routing_oracle(std::size_t n, std::size_t d) {
  const double ratio = static_cast<double>(d) / static_cast<double>(n);
  if (n >= 3000 && d <= 100) return ModelChoice::L100;
  if (d > 100 || (ratio >= 0.2 && n >= 3000)) return d <= 1000 ? ModelChoice::H1K : ModelChoice::H1K_with_projection;
  return ModelChoice::S100;
}

struct RouteCase {
  std::size_t n, d;
  ModelChoice want;
};

class RoutingGrid : public ::testing::TestWithParam<RouteCase> {};

TEST_P(RoutingGrid, MatchesBranchTable) {
  const auto c = GetParam();
  EXPECT_EQ(select_model(c.n, c.d), c.want) << c.n << "x" << c.d;
  EXPECT_EQ(select_model(c.n, c.d), routing_oracle(c.n, c.d));
}

INSTANTIATE_TEST_SUITE_P(
    Boundaries, RoutingGrid,
    ::testing::Values(RouteCase{2999, 100, ModelChoice::S100}, RouteCase{3000, 100, ModelChoice::L100},
                      RouteCase{2999, 101, ModelChoice::H1K}, RouteCase{3000, 101, ModelChoice::H1K},
                      RouteCase{2999, 1000, ModelChoice::H1K}, RouteCase{3000, 1000, ModelChoice::H1K},
                      RouteCase{2999, 1001, ModelChoice::H1K_with_projection},
                      RouteCase{3000, 1001, ModelChoice::H1K_with_projection},
                      // d/n straddling 0.2 at small d never leaves S100 below 3000 rows
                      RouteCase{400, 80, ModelChoice::S100}, RouteCase{401, 80, ModelChoice::S100},
                      RouteCase{5000, 50, ModelChoice::L100}, RouteCase{500, 20, ModelChoice::S100}));

INSTANTIATE_TEST_SUITE_P(PublishedRows, RoutingGrid,
                         ::testing::Values(RouteCase{3751, 1776, ModelChoice::H1K_with_projection},
                                           RouteCase{8378, 120, ModelChoice::H1K},
                                           RouteCase{425240, 78, ModelChoice::L100}));

TEST(Routing, RatioBranchFiresWithLooseFeatureThreshold) {
  RouterConfig cfg;
  cfg.d_threshold = 2000;  // makes the first branch reachable for wide data
  EXPECT_EQ(select_model(3000, 600, cfg), ModelChoice::L100);
  cfg.d_threshold = 100;
  EXPECT_EQ(select_model(3000, 600, cfg), ModelChoice::H1K);
}

TEST(Routing, MatchesOracleOnRandomShapes) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> n(1, 20000), d(1, 3000);
  for (int i = 0; i < 5000; ++i) {
    const std::size_t a = n(rng), b = d(rng);
    ASSERT_EQ(select_model(a, b), routing_oracle(a, b)) << a << "x" << b;
  }
}

TEST(Routing, NamesRoundTrip) {
  for (auto c : {ModelChoice::S100, ModelChoice::L100, ModelChoice::H1K, ModelChoice::H1K_with_projection})
    EXPECT_EQ(parse_model_choice(to_string(c)), c);
  EXPECT_THROW(parse_model_choice("XL"), Error);
}

ModelConfig tiny_model(std::size_t fc = 4, std::size_t cc = 3) {
  ModelConfig c;
  c.d_model = 16;
  c.n_layers = 2;
  c.n_heads = 2;
  c.feature_capacity = fc;
  c.class_capacity = cc;
  c.max_prompt = 256;
  return c;
}

std::shared_ptr<const Checkpoint> random_checkpoint(const ModelConfig& cfg, std::uint64_t seed = 1) {
  auto ck = std::make_shared<Checkpoint>();
  ck->config = cfg;
  ck->tensors = init_parameters(cfg, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.3);
  for (auto& [name, m] : ck->tensors)
    for (auto& v : m.values()) v += n(rng);
  return ck;
}

TEST(Router, ChoiceForcingAndMissingModels) {
  Router r;
  EXPECT_THROW(r.checkpoint(ModelChoice::S100), StateError);
  r.set(ModelChoice::S100, random_checkpoint(tiny_model()));
  EXPECT_EQ(r.choose(5000, 50), ModelChoice::L100);
  EXPECT_THROW(r.checkpoint(ModelChoice::L100), StateError);
  r.force(ModelChoice::S100);
  EXPECT_EQ(r.choose(5000, 50), ModelChoice::S100);
  EXPECT_EQ(r.algorithm_choice(5000, 50), ModelChoice::L100);
  r.force(std::nullopt);
  r.set_all(random_checkpoint(tiny_model()));
  EXPECT_NO_THROW(r.checkpoint(ModelChoice::H1K_with_projection));
}

TEST(Router, RejectsNonPositiveThresholds) {
  RouterConfig cfg;
  cfg.n_threshold = 0;
  EXPECT_THROW(Router{cfg}, ContractError);
}

TEST(Classify, DuplicatedTestRowGivesIdenticalRows) {
  const auto ck = random_checkpoint(tiny_model());
  TabularTask t = sample_blobs(40, 3, 3, 4.0, 2, 30);
  // replace the test rows with five copies of row 35
  Matrix x(35, 3);
  std::vector<std::size_t> y;
  for (std::size_t i = 0; i < 35; ++i) {
    const std::size_t src = i < 30 ? i : 35;
    for (std::size_t j = 0; j < 3; ++j) x(i, j) = t.x(src, j);
    y.push_back(t.labels[src]);
  }
  t.x = std::move(x);
  t.labels = std::move(y);
  const ClassifyResult r = classify_with(t, *ck);
  ASSERT_EQ(r.proba.rows(), 5u);
  for (std::size_t i = 1; i < 5; ++i)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(r.proba(i, k), r.proba(0, k));
}

TEST(Classify, ProbabilitiesMetricsAndDeterminism) {
  const auto ck = random_checkpoint(tiny_model());
  const TabularTask t = sample_blobs(80, 4, 2, 5.0, 3, 40);
  InferenceOptions o;
  o.timing_repeats = 3;
  const ClassifyResult a = classify_with(t, *ck, o), b = classify_with(t, *ck, o);
  EXPECT_TRUE(a.proba == b.proba);
  ASSERT_EQ(a.proba.cols(), 2u);
  for (std::size_t i = 0; i < a.proba.rows(); ++i) EXPECT_NEAR(a.proba(i, 0) + a.proba(i, 1), 1.0, 1e-12);
  EXPECT_GE(a.accuracy, 0.0);
  EXPECT_LE(a.accuracy, 1.0);
  EXPECT_GT(a.seconds, 0.0);
  EXPECT_GT(a.attention_cost.flops, 0u);
  o.precision = Precision::f32;
  const ClassifyResult f = classify_with(t, *ck, o);
  for (std::size_t i = 0; i < f.proba.size(); ++i) EXPECT_NEAR(f.proba[i], a.proba[i], 1e-3);
}

TEST(Classify, RoutesOnWholeDatasetShape) {
  Router r;
  r.set(ModelChoice::S100, random_checkpoint(tiny_model(), 1));
  r.set(ModelChoice::H1K, random_checkpoint(tiny_model(), 2));
  const TabularTask t = sample_blobs(60, 3, 2, 5.0, 4, 30);
  EXPECT_EQ(classify(t, r).choice, ModelChoice::S100);
  r.force(ModelChoice::H1K);
  const ClassifyResult forced = classify(t, r);
  EXPECT_EQ(forced.choice, ModelChoice::H1K);
  EXPECT_EQ(forced.algorithm_choice, ModelChoice::S100);
  EXPECT_TRUE(classify_with(t, r.checkpoint(ModelChoice::H1K)).proba == forced.proba);
}

TEST(Classify, CapacityAndContractErrors) {
  const auto ck = random_checkpoint(tiny_model(4, 3));
  EXPECT_THROW(classify_with(sample_blobs(60, 2, 4, 5.0, 1, 30), *ck), CapacityError);
  TabularTask all_train = sample_blobs(40, 2, 2, 5.0, 1, 40);
  EXPECT_THROW(classify_with(all_train, *ck), ContractError);
}

TEST(Classify, WideInputsAreProjected) {
  const auto ck = random_checkpoint(tiny_model(4, 2));
  const TabularTask t = sample_blobs(50, 9, 2, 5.0, 5, 25);
  InferenceOptions a, b;
  a.projection_seed = 1;
  b.projection_seed = 2;
  EXPECT_EQ(classify_with(t, *ck, a).proba.rows(), 25u);
  EXPECT_FALSE(classify_with(t, *ck, a).proba == classify_with(t, *ck, b).proba);
}

TabularTask regression_task(std::size_t n, std::size_t n_train, std::uint64_t seed, double noise = 0.01) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  TabularTask t;
  t.kind = TaskKind::regression;
  t.x = Matrix(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    t.x(i, 0) = g(rng);
    t.targets.push_back(2.0 * t.x(i, 0) + noise * g(rng));
  }
  t.n_train = n_train;
  return t;
}

TEST(Regression, BinIndexEdges) {
  EXPECT_EQ(bin_index(0.0, 0.0, 1.0, 10), 0u);
  EXPECT_EQ(bin_index(0.05, 0.0, 1.0, 10), 0u);
  EXPECT_EQ(bin_index(0.15, 0.0, 1.0, 10), 1u);
  EXPECT_EQ(bin_index(1.0, 0.0, 1.0, 10), 9u);
  EXPECT_EQ(bin_index(-3.0, 0.0, 1.0, 10), 0u);
  EXPECT_EQ(bin_index(7.0, 0.0, 1.0, 10), 9u);
}

TEST(Regression, OracleClassifierDecodeBound) {
  for (std::size_t bins : {10u, 100u}) {
    const TabularTask t = regression_task(600, 300, bins);
    const RegressionResult r = regress_via_bins(t, bins, [](const TabularTask& b) {
      Matrix p(b.n_test(), b.n_classes);
      for (std::size_t i = 0; i < b.n_test(); ++i) p(i, b.labels[b.n_train + i]) = 1.0;
      return p;
    });
    const double half = 0.5 * (r.hi - r.lo) / static_cast<double>(bins);
    double worst = 0;
    for (std::size_t i = 0; i < t.n_test(); ++i) {
      const double y = t.targets[t.n_train + i];
      if (y < r.lo || y > r.hi) continue;
      worst = std::max(worst, std::abs(r.predictions[i] - y));
    }
    EXPECT_LE(worst, half + 1e-12) << bins;
    EXPECT_GT(r.r2, 0.9);
  }
}

TEST(Regression, UniformProbabilitiesPredictTheRangeMidpoint) {
  const TabularTask t = regression_task(50, 30, 3);
  const RegressionResult r = regress_via_bins(t, 10, [](const TabularTask& b) {
    return Matrix(b.n_test(), b.n_classes, 1.0 / static_cast<double>(b.n_classes));
  });
  for (double p : r.predictions) EXPECT_NEAR(p, 0.5 * (r.lo + r.hi), 1e-12);
}

TEST(Regression, Errors) {
  const auto identity = [](const TabularTask& b) { return Matrix(b.n_test(), b.n_classes); };
  TabularTask t = regression_task(20, 10, 1);
  EXPECT_THROW(regress_via_bins(t, 1, identity), ContractError);
  TabularTask flat = t;
  std::fill(flat.targets.begin(), flat.targets.end(), 3.0);
  EXPECT_THROW(regress_via_bins(flat, 10, identity), ContractError);
  EXPECT_THROW(regress_via_bins(t, 10, [](const TabularTask&) { return Matrix(1, 1); }), DimensionError);
}

TEST(Regression, BriefTrainedModelBeatsTheMeanBaseline) {
  TrainConfig c;
  c.model.d_model = 32;
  c.model.n_layers = 2;
  c.model.n_heads = 2;
  c.model.feature_capacity = 2;
  c.model.class_capacity = 10;
  c.model.max_prompt = 256;
  c.prior.max_features = 2;
  c.prior.max_classes = 10;
  c.prior.prompt_len = 128;
  c.batch_size = 4;
  c.steps_per_epoch = 300;
  c.learning_rate = 1e-3;
  Router router;
  router.set_all(std::make_shared<const Checkpoint>(train(c).checkpoint));
  const RegressionResult r = regress_via_bins(regression_task(200, 100, 9), router, 10);
  EXPECT_GT(r.r2, 0.0);
}

}  // namespace
}  // namespace linpfn
