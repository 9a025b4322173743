// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "linpfn/autograd.hpp"
#include "test_util.hpp"

namespace linpfn {
namespace {

using testutil::finite_difference;
using testutil::grad_rel_error;
using testutil::random_matrix;

// A unary graph under test: maps (x, fixed random context) to an output matrix.
using Builder = std::function<ag::Var(const ag::Var& x, const std::vector<Matrix>& ctx)>;

struct OpCase {
  const char* name;
  std::size_t rows, cols;
  std::vector<std::pair<std::size_t, std::size_t>> ctx_shapes;
  Builder build;
};

// Checks d/dx sum(build(x) ⊙ W) against central differences (step 1e-3).
double check_op(const OpCase& op, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix x0 = random_matrix(op.rows, op.cols, rng);
  // elu(x)+1 has a second-derivative jump at 0; keep samples a few FD steps away.
  for (auto& v : x0.values())
    if (std::abs(v) < 0.01) v = v < 0 ? -0.01 : 0.01;
  std::vector<Matrix> ctx;
  for (auto [r, c] : op.ctx_shapes) ctx.push_back(random_matrix(r, c, rng));
  Matrix probe_out = op.build(ag::Var(x0), ctx).value();
  Matrix w = random_matrix(probe_out.rows(), probe_out.cols(), rng);

  auto loss_value = [&](const Matrix& x) {
    Matrix out = op.build(ag::Var(x), ctx).value();
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * w[i];
    return s;
  };
  ag::Tape tape;
  ag::Var x = tape.leaf(x0, "x");
  ag::Var loss = ag::sum(ag::mul_const(op.build(x, ctx), w));
  auto grads = tape.backward(loss);
  return grad_rel_error(grads.at("x"), finite_difference(loss_value, x0));
}

std::vector<OpCase> op_cases() {
  using ag::Var;
  auto c = [](const std::vector<Matrix>& ctx, std::size_t i) { return Var(ctx[i]); };
  return {
      {"matmul_left", 3, 4, {{4, 2}}, [=](const Var& x, const auto& k) { return ag::matmul(x, c(k, 0)); }},
      {"matmul_right", 4, 2, {{3, 4}}, [=](const Var& x, const auto& k) { return ag::matmul(c(k, 0), x); }},
      {"matmul_nt", 3, 4, {{5, 4}}, [=](const Var& x, const auto& k) { return ag::matmul_nt(c(k, 0), x); }},
      {"matmul_tn", 5, 3, {{5, 2}}, [=](const Var& x, const auto& k) { return ag::matmul_tn(x, c(k, 0)); }},
      {"add_row", 1, 4, {{3, 4}}, [=](const Var& x, const auto& k) { return ag::add_row(c(k, 0), x); }},
      {"mul", 3, 3, {{3, 3}}, [=](const Var& x, const auto& k) { return ag::mul(x, ag::mul(x, c(k, 0))); }},
      {"elu_plus_one", 4, 5, {}, [](const Var& x, const auto&) { return ag::elu_plus_one(x); }},
      {"gelu", 4, 5, {}, [](const Var& x, const auto&) { return ag::gelu(x); }},
      {"layer_norm_x", 3, 6, {{1, 6}, {1, 6}},
       [=](const Var& x, const auto& k) { return ag::layer_norm(x, c(k, 0), c(k, 1)); }},
      {"layer_norm_gain", 1, 6, {{3, 6}, {1, 6}},
       [=](const Var& x, const auto& k) { return ag::layer_norm(c(k, 0), x, c(k, 1)); }},
      {"softmax_rows", 3, 5, {}, [](const Var& x, const auto&) { return ag::softmax_rows(x); }},
      {"slices", 6, 4, {},
       [](const Var& x, const auto&) {
         return ag::vstack(ag::col_slice(ag::row_slice(x, 1, 4), 0, 2), ag::col_slice(x, 1, 3));
       }},
      {"hstack", 3, 2, {{3, 3}},
       [=](const Var& x, const auto& k) {
         std::vector<Var> parts{x, c(k, 0), ag::scale(x, 2.0)};
         return ag::hstack(parts);
       }},
      {"gather_rows", 4, 3, {},
       [](const Var& x, const auto&) {
         std::vector<std::size_t> idx{2, 0, 2, 3};
         return ag::gather_rows(x, idx);
       }},
      {"sums", 4, 3, {},
       [](const Var& x, const auto&) {
         return ag::matmul(ag::row_sum(x), ag::col_sum(ag::add_scalar(x, 0.5)));
       }},
      {"div_rows", 4, 3, {},
       [](const Var& x, const auto&) {
         // positive denominator from x itself
         return ag::div_rows(x, ag::add_scalar(ag::row_sum(ag::elu_plus_one(x)), 1.0));
       }},
      {"cross_entropy", 4, 5, {},
       [](const Var& x, const auto&) {
         std::vector<std::size_t> labels{0, 2, 1, 2};
         return ag::cross_entropy(x, labels, 3);
       }},
  };
}

TEST(Autograd, EveryPrimitiveMatchesFiniteDifferencesOn100Seeds) {
  for (const auto& op : op_cases()) {
    double worst = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) worst = std::max(worst, check_op(op, seed));
    EXPECT_LE(worst, 1e-4) << op.name;
  }
}

TEST(Autograd, LinearLossGivesOuterProductGradient) {
  std::mt19937_64 rng(4);
  Matrix w0 = random_matrix(3, 4, rng), x = random_matrix(4, 1, rng);
  ag::Tape tape;
  ag::Var w = tape.leaf(w0, "W");
  auto grads = tape.backward(ag::sum(ag::matmul(w, ag::Var(x))));
  // d/dW sum(W x) = 1 xᵀ
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(grads.at("W")(i, j), x[j], 1e-14);
  auto fd = finite_difference([&](const Matrix& m) { return ag::sum(ag::matmul(ag::Var(m), ag::Var(x))).value()[0]; }, w0);
  EXPECT_LE(grad_rel_error(grads.at("W"), fd), 1e-4);
}

TEST(Autograd, UnusedParameterHasZeroGradient) {
  ag::Tape tape;
  ag::Var a = tape.leaf(Matrix{{1, 2}}, "a");
  ag::Var b = tape.leaf(Matrix{{3, 4}}, "b");
  auto grads = tape.backward(ag::sum(a));
  EXPECT_EQ(grads.at("b"), Matrix(1, 2));
  EXPECT_EQ(grads.at("a"), Matrix(1, 2, 1.0));
}

TEST(Autograd, HalfSquaredNormGradientIsIdentity) {
  std::mt19937_64 rng(8);
  Matrix w0 = random_matrix(3, 3, rng);
  ag::Tape tape;
  ag::Var w = tape.leaf(w0, "W");
  auto grads = tape.backward(ag::scale(ag::sum_squares(w), 0.5));
  EXPECT_LT(max_abs_diff(grads.at("W"), w0), 1e-15);
}

TEST(Autograd, SharedSubexpressionAccumulatesOnce) {
  ag::Tape tape;
  ag::Var x = tape.leaf(Matrix{{2.0}}, "x");
  ag::Var y = ag::mul(x, x);          // x²
  ag::Var z = ag::add(y, ag::mul(y, x));  // x² + x³
  auto grads = tape.backward(z);
  EXPECT_DOUBLE_EQ(grads.at("x")[0], 2 * 2.0 + 3 * 4.0);
}

TEST(Autograd, BackwardBeforeForwardIsStateError) {
  ag::Tape tape;
  ag::Var x = tape.leaf(Matrix{{1.0}}, "x");
  EXPECT_THROW(tape.backward(x), StateError);  // nothing recorded yet
  ag::Tape other;
  ag::Var loss = ag::sum(other.leaf(Matrix{{1.0}}));
  EXPECT_THROW(tape.backward(loss), StateError);  // produced elsewhere
}

TEST(Autograd, TapeCannotBeReplayedTwice) {
  ag::Tape tape;
  ag::Var loss = ag::sum(tape.leaf(Matrix{{1.0, 2.0}}, "x"));
  tape.backward(loss);
  EXPECT_THROW(tape.backward(loss), StateError);
}

TEST(Autograd, ConstantsRecordNothing) {
  ag::Var a(Matrix{{1, 2}});
  ag::Var b = ag::elu_plus_one(ag::scale(a, 3.0));
  EXPECT_FALSE(b.requires_grad());
  EXPECT_EQ(b.tape(), nullptr);
}

}  // namespace
}  // namespace linpfn
