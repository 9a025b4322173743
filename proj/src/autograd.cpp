// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "linpfn/autograd.hpp"

#include <cmath>
#include <limits>

namespace linpfn::ag {

using detail::Node;

void Node::accumulate(const Matrix& g) {
  if (g.rows() != value.rows() || g.cols() != value.cols()) {
    throw DimensionError("gradient shape " + g.shape() + " does not match value " + value.shape());
  }
  if (grad.rows() != value.rows() || grad.cols() != value.cols()) {
    grad = g;
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

Var::Var(Matrix value) : node_(std::make_shared<Node>()) { node_->value = std::move(value); }

Matrix Var::grad() const {
  if (!node_) return {};
  if (node_->grad.empty()) return Matrix(node_->value.rows(), node_->value.cols());
  return node_->grad;
}

Var Tape::leaf(Matrix value, std::string name) {
  if (consumed_) throw StateError("tape already consumed by backward");
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  n->name = std::move(name);
  n->tape = this;
  leaves_.push_back(n);
  return Var(n);
}

void Tape::record(std::shared_ptr<Node> node) {
  if (consumed_) throw StateError("tape already consumed by backward");
  nodes_.push_back(std::move(node));
}

Gradients Tape::backward(const Var& loss) {
  if (!loss.node()) throw StateError("backward on an empty value");
  const auto& v = loss.value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw StateError("backward requires a scalar loss, got " + v.shape());
  }
  return backward(loss, Matrix(1, 1, 1.0));
}

Gradients Tape::backward(const Var& loss, const Matrix& loss_grad) {
  if (consumed_) throw StateError("tape already consumed by backward");
  if (!loss.node() || loss.tape() != this || nodes_.empty()) {
    throw StateError("backward called before a forward pass was recorded on this tape");
  }
  const auto& root = loss.node();
  bool recorded = false;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->get() == root.get()) {
      recorded = true;
      break;
    }
  }
  if (!recorded) throw StateError("loss was not produced by this tape");

  root->accumulate(loss_grad);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (n.grad.empty() || !n.backward) continue;
    n.backward(n);
  }
  consumed_ = true;

  Gradients out;
  for (const auto& l : leaves_) {
    if (l->name.empty()) continue;
    out[l->name] = l->grad.empty() ? Matrix(l->value.rows(), l->value.cols()) : l->grad;
  }
  return out;
}

Var make_result(Matrix value, std::vector<Var> inputs, std::function<void(Node&)> backward) {
  Tape* tape = nullptr;
  bool needs = false;
  for (const auto& in : inputs) {
    if (in.requires_grad()) {
      needs = true;
      tape = in.tape();
      break;
    }
  }
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  if (needs) {
    n->requires_grad = true;
    n->tape = tape;
    n->parents.reserve(inputs.size());
    for (auto& in : inputs) n->parents.push_back(in.node());
    n->backward = std::move(backward);
    tape->record(n);
  }
  return Var(n);
}

namespace {

inline Node& parent(Node& n, std::size_t i) { return *n.parents[i]; }
inline bool wants(Node& n, std::size_t i) { return n.parents[i]->requires_grad; }

}  // namespace

Var matmul(const Var& a, const Var& b) {
  return make_result(linpfn::matmul(a.value(), b.value()), {a, b}, [](Node& n) {
    if (wants(n, 0)) parent(n, 0).accumulate(linpfn::matmul_nt(n.grad, parent(n, 1).value));
    if (wants(n, 1)) parent(n, 1).accumulate(linpfn::matmul_tn(parent(n, 0).value, n.grad));
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  return make_result(linpfn::matmul_nt(a.value(), b.value()), {a, b}, [](Node& n) {
    // out = a bᵀ: da = g b, db = gᵀ a
    if (wants(n, 0)) parent(n, 0).accumulate(linpfn::matmul(n.grad, parent(n, 1).value));
    if (wants(n, 1)) parent(n, 1).accumulate(linpfn::matmul_tn(n.grad, parent(n, 0).value));
  });
}

Var matmul_tn(const Var& a, const Var& b) {
  return make_result(linpfn::matmul_tn(a.value(), b.value()), {a, b}, [](Node& n) {
    // out = aᵀ b: da = b gᵀ, db = a g
    if (wants(n, 0)) parent(n, 0).accumulate(linpfn::matmul_nt(parent(n, 1).value, n.grad));
    if (wants(n, 1)) parent(n, 1).accumulate(linpfn::matmul(parent(n, 0).value, n.grad));
  });
}

Var add(const Var& a, const Var& b) {
  return make_result(a.value() + b.value(), {a, b}, [](Node& n) {
    if (wants(n, 0)) parent(n, 0).accumulate(n.grad);
    if (wants(n, 1)) parent(n, 1).accumulate(n.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  return make_result(a.value() - b.value(), {a, b}, [](Node& n) {
    if (wants(n, 0)) parent(n, 0).accumulate(n.grad);
    if (wants(n, 1)) parent(n, 1).accumulate(n.grad * -1.0);
  });
}

Var add_row(const Var& a, const Var& bias) {
  return make_result(linpfn::add_row(a.value(), bias.value()), {a, bias}, [](Node& n) {
    if (wants(n, 0)) parent(n, 0).accumulate(n.grad);
    if (wants(n, 1)) {
      Matrix g(1, n.grad.cols());
      for (std::size_t i = 0; i < n.grad.rows(); ++i)
        for (std::size_t j = 0; j < n.grad.cols(); ++j) g[j] += n.grad(i, j);
      parent(n, 1).accumulate(g);
    }
  });
}

Var mul(const Var& a, const Var& b) {
  return make_result(hadamard(a.value(), b.value()), {a, b}, [](Node& n) {
    if (wants(n, 0)) parent(n, 0).accumulate(hadamard(n.grad, parent(n, 1).value));
    if (wants(n, 1)) parent(n, 1).accumulate(hadamard(n.grad, parent(n, 0).value));
  });
}

Var mul_const(const Var& a, const Matrix& c) {
  return make_result(hadamard(a.value(), c), {a}, [c](Node& n) {
    parent(n, 0).accumulate(hadamard(n.grad, c));
  });
}

Var scale(const Var& a, double s) {
  return make_result(a.value() * s, {a}, [s](Node& n) { parent(n, 0).accumulate(n.grad * s); });
}

Var add_scalar(const Var& a, double s) {
  Matrix v = a.value();
  for (auto& x : v.values()) x += s;
  return make_result(std::move(v), {a}, [](Node& n) { parent(n, 0).accumulate(n.grad); });
}

Var elu_plus_one(const Var& x) {
  return make_result(linpfn::elu_plus_one(x.value()), {x}, [](Node& n) {
    const Matrix& in = parent(n, 0).value;
    Matrix g = n.grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= elu_plus_one_derivative(in[i]);
    parent(n, 0).accumulate(g);
  });
}

Var gelu(const Var& x) {
  Matrix v = x.value();
  for (auto& e : v.values()) e = linpfn::gelu(e);
  return make_result(std::move(v), {x}, [](Node& n) {
    const Matrix& in = parent(n, 0).value;
    Matrix g = n.grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= gelu_derivative(in[i]);
    parent(n, 0).accumulate(g);
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  const Matrix& xv = x.value();
  const std::size_t r = xv.rows(), c = xv.cols();
  if (gain.value().size() != c || bias.value().size() != c) {
    throw DimensionError("layer_norm: gain/bias length must equal " + std::to_string(c));
  }
  if (!(eps > 0)) throw ContractError("layer_norm: eps must be positive");
  Matrix xhat(r, c);
  Matrix inv_std(r, 1);
  for (std::size_t i = 0; i < r; ++i) {
    double mean = 0;
    for (std::size_t j = 0; j < c; ++j) mean += xv(i, j);
    mean /= double(c);
    double var = 0;
    for (std::size_t j = 0; j < c; ++j) var += (xv(i, j) - mean) * (xv(i, j) - mean);
    var /= double(c);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) xhat(i, j) = (xv(i, j) - mean) * inv_std[i];
  }
  Matrix out(r, c);
  const Matrix& gv = gain.value();
  const Matrix& bv = bias.value();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(i, j) = xhat(i, j) * gv[j] + bv[j];

  return make_result(std::move(out), {x, gain, bias}, [xhat, inv_std](Node& n) {
    const std::size_t r = xhat.rows(), c = xhat.cols();
    const Matrix& g = n.grad;
    const Matrix& gv = parent(n, 1).value;
    if (wants(n, 1) || wants(n, 2)) {
      Matrix dg(1, c), db(1, c);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
          dg[j] += g(i, j) * xhat(i, j);
          db[j] += g(i, j);
        }
      auto reshaped = [&gv](const Matrix& m) {
        return Matrix(gv.rows(), gv.cols(), std::vector<double>(m.values().begin(), m.values().end()));
      };
      if (wants(n, 1)) parent(n, 1).accumulate(reshaped(dg));
      if (wants(n, 2)) parent(n, 2).accumulate(reshaped(db));
    }
    if (wants(n, 0)) {
      Matrix dx(r, c);
      for (std::size_t i = 0; i < r; ++i) {
        double mean_dy = 0, mean_dy_xhat = 0;
        for (std::size_t j = 0; j < c; ++j) {
          const double dy = g(i, j) * gv[j];
          mean_dy += dy;
          mean_dy_xhat += dy * xhat(i, j);
        }
        mean_dy /= double(c);
        mean_dy_xhat /= double(c);
        for (std::size_t j = 0; j < c; ++j) {
          const double dy = g(i, j) * gv[j];
          dx(i, j) = inv_std[i] * (dy - mean_dy - xhat(i, j) * mean_dy_xhat);
        }
      }
      parent(n, 0).accumulate(dx);
    }
  });
}

Var softmax_rows(const Var& x) {
  Matrix p = linpfn::softmax_rows(x.value());
  return make_result(p, {x}, [p](Node& n) {
    Matrix dx(p.rows(), p.cols());
    for (std::size_t i = 0; i < p.rows(); ++i) {
      double dot = 0;
      for (std::size_t j = 0; j < p.cols(); ++j) dot += n.grad(i, j) * p(i, j);
      for (std::size_t j = 0; j < p.cols(); ++j) dx(i, j) = p(i, j) * (n.grad(i, j) - dot);
    }
    parent(n, 0).accumulate(dx);
  });
}

Var row_slice(const Var& a, std::size_t begin, std::size_t end) {
  const std::size_t rows = a.rows(), cols = a.cols();
  return make_result(linpfn::row_slice(a.value(), begin, end), {a}, [=](Node& n) {
    Matrix g(rows, cols);
    std::copy(n.grad.data(), n.grad.data() + n.grad.size(), g.data() + begin * cols);
    parent(n, 0).accumulate(g);
  });
}

Var col_slice(const Var& a, std::size_t begin, std::size_t end) {
  const std::size_t rows = a.rows(), cols = a.cols();
  return make_result(linpfn::col_slice(a.value(), begin, end), {a}, [=](Node& n) {
    Matrix g(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = begin; j < end; ++j) g(i, j) = n.grad(i, j - begin);
    parent(n, 0).accumulate(g);
  });
}

Var vstack(const Var& a, const Var& b) {
  const std::size_t ra = a.rows();
  return make_result(linpfn::vstack(a.value(), b.value()), {a, b}, [ra](Node& n) {
    if (wants(n, 0)) parent(n, 0).accumulate(linpfn::row_slice(n.grad, 0, ra));
    if (wants(n, 1)) parent(n, 1).accumulate(linpfn::row_slice(n.grad, ra, n.grad.rows()));
  });
}

Var hstack(std::span<const Var> parts) {
  std::vector<Matrix> values;
  std::vector<std::size_t> offsets;
  std::size_t c = 0;
  for (const auto& p : parts) {
    values.push_back(p.value());
    offsets.push_back(c);
    c += p.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return make_result(linpfn::hstack<double>(values), std::move(inputs), [offsets](Node& n) {
    for (std::size_t k = 0; k < n.parents.size(); ++k) {
      if (!wants(n, k)) continue;
      const std::size_t w = parent(n, k).value.cols();
      parent(n, k).accumulate(linpfn::col_slice(n.grad, offsets[k], offsets[k] + w));
    }
  });
}

Var gather_rows(const Var& table, std::span<const std::size_t> idx) {
  std::vector<std::size_t> ix(idx.begin(), idx.end());
  const std::size_t rows = table.rows(), cols = table.cols();
  return make_result(select_rows<double>(table.value(), ix), {table}, [ix, rows, cols](Node& n) {
    Matrix g(rows, cols);
    for (std::size_t i = 0; i < ix.size(); ++i)
      for (std::size_t j = 0; j < cols; ++j) g(ix[i], j) += n.grad(i, j);
    parent(n, 0).accumulate(g);
  });
}

Var col_sum(const Var& a) {
  const Matrix& v = a.value();
  Matrix s(1, v.cols());
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j) s[j] += v(i, j);
  const std::size_t rows = v.rows();
  return make_result(std::move(s), {a}, [rows](Node& n) {
    Matrix g(rows, n.grad.cols());
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) = n.grad[j];
    parent(n, 0).accumulate(g);
  });
}

Var row_sum(const Var& a) {
  const Matrix& v = a.value();
  Matrix s(v.rows(), 1);
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j) s[i] += v(i, j);
  const std::size_t cols = v.cols();
  return make_result(std::move(s), {a}, [cols](Node& n) {
    Matrix g(n.grad.rows(), cols);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < cols; ++j) g(i, j) = n.grad[i];
    parent(n, 0).accumulate(g);
  });
}

Var div_rows(const Var& num, const Var& den) {
  const Matrix& nv = num.value();
  const Matrix& dv = den.value();
  if (dv.rows() != nv.rows() || dv.cols() != 1) {
    throw DimensionError("div_rows: denominator " + dv.shape() + " incompatible with " + nv.shape());
  }
  Matrix out(nv.rows(), nv.cols());
  for (std::size_t i = 0; i < nv.rows(); ++i)
    for (std::size_t j = 0; j < nv.cols(); ++j) out(i, j) = nv(i, j) / dv[i];
  return make_result(out, {num, den}, [out](Node& n) {
    const Matrix& d = parent(n, 1).value;
    if (wants(n, 0)) {
      Matrix g(out.rows(), out.cols());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) = n.grad(i, j) / d[i];
      parent(n, 0).accumulate(g);
    }
    if (wants(n, 1)) {
      Matrix g(out.rows(), 1);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        double s = 0;
        for (std::size_t j = 0; j < out.cols(); ++j) s += n.grad(i, j) * out(i, j);
        g[i] = -s / d[i];
      }
      parent(n, 1).accumulate(g);
    }
  });
}

Var sum(const Var& a) {
  double s = 0;
  for (double v : a.value().values()) s += v;
  const std::size_t r = a.rows(), c = a.cols();
  return make_result(Matrix(1, 1, s), {a}, [r, c](Node& n) {
    parent(n, 0).accumulate(Matrix(r, c, n.grad[0]));
  });
}

Var sum_squares(const Var& a) {
  double s = 0;
  for (double v : a.value().values()) s += v * v;
  return make_result(Matrix(1, 1, s), {a}, [](Node& n) {
    parent(n, 0).accumulate(parent(n, 0).value * (2.0 * n.grad[0]));
  });
}

Var cross_entropy(const Var& logits, std::span<const std::size_t> labels, std::size_t n_classes) {
  const Matrix& z = logits.value();
  const std::size_t m = z.rows();
  if (m == 0) throw ContractError("cross_entropy: no rows");
  if (labels.size() != m) throw DimensionError("cross_entropy: label count does not match rows");
  if (n_classes < 1 || n_classes > z.cols()) throw ContractError("cross_entropy: n_classes out of range");
  Matrix probs(m, n_classes);
  double total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (labels[i] >= n_classes) throw ContractError("cross_entropy: label out of range");
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_classes; ++c) mx = std::max(mx, z(i, c));
    double s = 0;
    for (std::size_t c = 0; c < n_classes; ++c) s += std::exp(z(i, c) - mx);
    const double lse = mx + std::log(s);
    total += lse - z(i, labels[i]);
    for (std::size_t c = 0; c < n_classes; ++c) probs(i, c) = std::exp(z(i, c) - lse);
  }
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  const std::size_t cap = z.cols();
  return make_result(Matrix(1, 1, total / double(m)), {logits}, [probs, lab, cap](Node& n) {
    const std::size_t m = probs.rows();
    Matrix g(m, cap);
    const double s = n.grad[0] / double(m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t c = 0; c < probs.cols(); ++c) g(i, c) = s * probs(i, c);
      g(i, lab[i]) -= s;
    }
    parent(n, 0).accumulate(g);
  });
}

}  // namespace linpfn::ag
