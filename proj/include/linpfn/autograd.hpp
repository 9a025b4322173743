// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "linpfn/matrix.hpp"

namespace linpfn::ag {

class Tape;

namespace detail {

struct Node {
  Matrix value;
  Matrix grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::string name;  // set for named leaves
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
  Tape* tape = nullptr;

  void accumulate(const Matrix& g);
};

}  // namespace detail

/// Handle to a value in (possibly) a recorded computation. Values not
/// attached to a tape are plain constants; operations on them record nothing.
class Var {
 public:
  Var() = default;
  explicit Var(Matrix value);

  const Matrix& value() const { return node_->value; }
  /// Gradient after `Tape::backward`; zeros if the value did not influence the loss.
  Matrix grad() const;
  bool requires_grad() const { return node_ && node_->requires_grad; }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  Tape* tape() const { return node_ ? node_->tape : nullptr; }

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  friend class Tape;
  friend Var make_result(Matrix value, std::vector<Var> inputs, std::function<void(detail::Node&)> backward);
  explicit Var(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;
};

using Gradients = std::map<std::string, Matrix>;

/// Single-writer record of a forward pass. Backward replays it in reverse and
/// visits every recorded node exactly once.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Trainable input. Named leaves appear in the result of `backward`.
  Var leaf(Matrix value, std::string name = {});

  /// Seeds d(loss) = loss_grad (default 1 for a 1×1 loss) and back-propagates.
  /// Throws StateError if `loss` was not produced on this tape or the tape was
  /// already consumed.
  Gradients backward(const Var& loss);
  Gradients backward(const Var& loss, const Matrix& loss_grad);

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  void record(std::shared_ptr<detail::Node> node);

 private:
  std::vector<std::shared_ptr<detail::Node>> nodes_;
  std::vector<std::shared_ptr<detail::Node>> leaves_;
  bool consumed_ = false;
};

/// Builds an op output. Records on the inputs' tape when any input requires grad.
Var make_result(Matrix value, std::vector<Var> inputs, std::function<void(detail::Node&)> backward);

Var matmul(const Var& a, const Var& b);
Var matmul_nt(const Var& a, const Var& b);  // a·bᵀ
Var matmul_tn(const Var& a, const Var& b);  // aᵀ·b
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var add_row(const Var& a, const Var& bias);  // bias: 1×cols
Var mul(const Var& a, const Var& b);         // elementwise
Var mul_const(const Var& a, const Matrix& c);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var elu_plus_one(const Var& x);
Var gelu(const Var& x);
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = kLayerNormEps);
Var softmax_rows(const Var& x);
Var row_slice(const Var& a, std::size_t begin, std::size_t end);
Var col_slice(const Var& a, std::size_t begin, std::size_t end);
Var vstack(const Var& a, const Var& b);
Var hstack(std::span<const Var> parts);
Var gather_rows(const Var& table, std::span<const std::size_t> idx);
Var col_sum(const Var& a);                 // 1×cols
Var row_sum(const Var& a);                 // rows×1
Var div_rows(const Var& num, const Var& den);  // num: r×c, den: r×1
Var sum(const Var& a);                     // 1×1
Var sum_squares(const Var& a);             // 1×1

/// Mean cross-entropy over rows, using only the first `n_classes` logits.
Var cross_entropy(const Var& logits, std::span<const std::size_t> labels, std::size_t n_classes);

}  // namespace linpfn::ag
