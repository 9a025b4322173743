// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "linpfn/model.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace linpfn {

Precision parse_precision(std::string_view s) {
  if (s == "f32") return Precision::f32;
  if (s == "f64") return Precision::f64;
  throw ContractError("unknown precision '" + std::string(s) + "' (expected f32 or f64)");
}

std::string_view to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

void ModelConfig::validate() const {
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0)
    throw ContractError("model config: d_model " + std::to_string(d_model) + " not divisible by n_heads " +
                        std::to_string(n_heads));
  if (n_layers == 0) throw ContractError("model config: n_layers must be >= 1");
  if (feature_capacity < 1) throw ContractError("model config: feature_capacity must be >= 1");
  if (class_capacity < 2) throw ContractError("model config: class_capacity must be >= 2");
  if (max_prompt < 2) throw ContractError("model config: max_prompt must be >= 2");
  if (hidden_mult < 1) throw ContractError("model config: hidden_mult must be >= 1");
  if (block_size < 1) throw ContractError("model config: block_size must be >= 1");
  if (attention_variant != attention::Variant::pfn_linear && attention_variant != attention::Variant::pfn_softmax)
    throw ContractError("model config: attention_variant must be pfn_linear or pfn_softmax");
}

ModelConfig model_preset(std::string_view name) {
  ModelConfig c;
  if (name == "toy-s") {
    c.d_model = 64;
    c.n_layers = 3;
    c.feature_capacity = 10;
    c.class_capacity = 10;
    c.max_prompt = 16384;
  } else if (name == "s100" || name == "l100" || name == "h1k") {
    c.d_model = 512;
    c.n_layers = 12;
    c.feature_capacity = name == "h1k" ? 1000 : 100;
    c.class_capacity = name == "h1k" ? 100 : 10;
    c.max_prompt = name == "s100" ? 1152 : 50000;
  } else {
    throw ContractError("unknown model preset '" + std::string(name) + "'");
  }
  return c;
}

std::vector<std::string> model_preset_names() { return {"toy-s", "s100", "l100", "h1k"}; }

std::vector<TensorSpec> parameter_specs(const ModelConfig& cfg) {
  const std::size_t d = cfg.d_model, h = cfg.d_model * cfg.hidden_mult;
  std::vector<TensorSpec> s{
      {"encoder.weight", cfg.feature_capacity, d},
      {"encoder.bias", 1, d},
      {"label_embed", cfg.class_capacity, d},
  };
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    s.push_back({p + "ln1.gain", 1, d});
    s.push_back({p + "ln1.bias", 1, d});
    s.push_back({p + "attn.wq", d, d});
    s.push_back({p + "attn.wk", d, d});
    s.push_back({p + "attn.wv", d, d});
    s.push_back({p + "attn.wo", d, d});
    s.push_back({p + "attn.bo", 1, d});
    s.push_back({p + "ln2.gain", 1, d});
    s.push_back({p + "ln2.bias", 1, d});
    s.push_back({p + "mlp.w1", d, h});
    s.push_back({p + "mlp.b1", 1, h});
    s.push_back({p + "mlp.w2", h, d});
    s.push_back({p + "mlp.b2", 1, d});
  }
  s.push_back({"final_ln.gain", 1, d});
  s.push_back({"final_ln.bias", 1, d});
  s.push_back({"head.w1", d, d});
  s.push_back({"head.b1", 1, d});
  s.push_back({"head.w2", d, cfg.class_capacity});
  s.push_back({"head.b2", 1, cfg.class_capacity});
  return s;
}

void round_to_f32(Matrix& m) {
  for (auto& v : m.values()) v = static_cast<double>(static_cast<float>(v));
}

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

TensorMap init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  TensorMap out;
  for (const auto& spec : parameter_specs(cfg)) {
    Matrix m(spec.rows, spec.cols);
    if (ends_with(spec.name, ".gain")) {
      m = Matrix(spec.rows, spec.cols, 1.0);
    } else if (spec.name == "label_embed") {
      std::normal_distribution<double> n(0.0, 1.0);
      for (auto& v : m.values()) v = n(rng);
    } else if (spec.rows > 1) {
      std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(spec.rows)));
      for (auto& v : m.values()) v = n(rng);
    }
    round_to_f32(m);
    out.emplace(spec.name, std::move(m));
  }
  return out;
}

Prompt make_prompt(const Matrix& x_train, std::span<const std::size_t> y_train, const Matrix& x_test) {
  if (x_train.rows() != y_train.size())
    throw DimensionError("make_prompt: " + std::to_string(x_train.rows()) + " train rows but " +
                         std::to_string(y_train.size()) + " labels");
  if (x_test.rows() > 0 && x_test.cols() != x_train.cols())
    throw DimensionError("make_prompt: train " + x_train.shape() + " and test " + x_test.shape() +
                         " feature widths differ");
  return Prompt{vstack(x_train, x_test), std::vector<std::size_t>(y_train.begin(), y_train.end())};
}

ParamVars as_constants(const TensorMap& params) {
  ParamVars p;
  for (const auto& [name, m] : params) p.emplace(name, ag::Var(m));
  return p;
}

namespace {

const ag::Var& param(const ParamVars& p, const std::string& name) {
  auto it = p.find(name);
  if (it == p.end()) throw ContractError("missing parameter '" + name + "'");
  return it->second;
}

constexpr double kAttentionEps = attention::kDefaultEps;

Matrix causal_train_mask(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) m(i, j) = 1.0;
  return m;
}

// Normalized linear attention of `fq` rows against state (S, z).
ag::Var linear_against_state(const ag::Var& fq, const ag::Var& s, const ag::Var& z) {
  ag::Var den = ag::add_scalar(ag::matmul_nt(fq, z), kAttentionEps);
  return ag::div_rows(ag::matmul(fq, s), den);
}

// Recorded single-head two-segment attention built from tape primitives.
ag::Var graph_attention(const ModelConfig& cfg, const ag::Var& q, const ag::Var& k, const ag::Var& v,
                        std::size_t n) {
  const std::size_t N = q.rows();
  const ag::Var k_tr = ag::row_slice(k, 0, n);
  const ag::Var v_tr = ag::row_slice(v, 0, n);
  if (cfg.attention_variant == attention::Variant::pfn_softmax) {
    ag::Var scores = ag::scale(ag::matmul_nt(q, k_tr), 1.0 / std::sqrt(static_cast<double>(q.cols())));
    if (cfg.causal_ablation) {
      Matrix mask(N, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) mask(i, j) = -std::numeric_limits<double>::infinity();
      scores = ag::add(scores, ag::Var(std::move(mask)));
    }
    return ag::matmul(ag::softmax_rows(scores), v_tr);
  }
  const ag::Var fq = ag::elu_plus_one(q);
  const ag::Var fk = ag::elu_plus_one(k_tr);
  const ag::Var s = ag::matmul_tn(fk, v_tr);
  const ag::Var z = ag::col_sum(fk);
  if (!cfg.causal_ablation) return linear_against_state(fq, s, z);

  // Train row i sees train rows j <= i; test rows see the whole train segment.
  const ag::Var fq_tr = ag::row_slice(fq, 0, n);
  const ag::Var a = ag::mul_const(ag::matmul_nt(fq_tr, fk), causal_train_mask(n));
  const ag::Var train_out = ag::div_rows(ag::matmul(a, v_tr), ag::add_scalar(ag::row_sum(a), kAttentionEps));
  if (N == n) return train_out;
  return ag::vstack(train_out, linear_against_state(ag::row_slice(fq, n, N), s, z));
}

template <typename T>
Matrix kernel_attention(const ModelConfig& cfg, const Matrix& q, const Matrix& k, const Matrix& v, std::size_t n,
                        attention::Cost* cost) {
  const BasicMatrix<T> qt = cast<T>(q), kt = cast<T>(k), vt = cast<T>(v);
  attention::Request<T> req;
  req.q = qt;
  req.k = kt;
  req.v = vt;
  req.variant = cfg.attention_variant;
  req.block_size = cfg.block_size;
  req.n_train = n;
  req.normalize = true;
  req.causal = cfg.causal_ablation;
  req.eps = T(kAttentionEps);
  req.scale = T(1.0 / std::sqrt(static_cast<double>(q.cols())));
  attention::Result<T> res = attention::pfn_attention(req);
  if (cost) *cost += res.cost;
  return cast<double>(res.output);
}

ag::Var multi_head_attention(const ModelConfig& cfg, const ag::Var& q, const ag::Var& k, const ag::Var& v,
                             std::size_t n, const ForwardOptions& opts) {
  const std::size_t dh = cfg.d_head();
  const bool recording = q.requires_grad() || k.requires_grad() || v.requires_grad();
  std::vector<ag::Var> heads;
  heads.reserve(cfg.n_heads);
  for (std::size_t h = 0; h < cfg.n_heads; ++h) {
    const std::size_t c0 = h * dh, c1 = c0 + dh;
    if (recording) {
      heads.push_back(graph_attention(cfg, ag::col_slice(q, c0, c1), ag::col_slice(k, c0, c1),
                                      ag::col_slice(v, c0, c1), n));
    } else {
      Matrix qh = col_slice(q.value(), c0, c1), kh = col_slice(k.value(), c0, c1), vh = col_slice(v.value(), c0, c1);
      heads.emplace_back(opts.precision == Precision::f32 ? kernel_attention<float>(cfg, qh, kh, vh, n, opts.cost)
                                                          : kernel_attention<double>(cfg, qh, kh, vh, n, opts.cost));
    }
  }
  return ag::hstack(heads);
}

ag::Var affine(const ag::Var& x, const ParamVars& p, const std::string& w, const std::string& b) {
  return ag::add_row(ag::matmul(x, param(p, w)), param(p, b));
}

void check_prompt(const ModelConfig& cfg, const Prompt& prompt) {
  if (prompt.x.cols() != cfg.feature_capacity)
    throw DimensionError("prompt features have width " + std::to_string(prompt.x.cols()) +
                         "; model expects padded width " + std::to_string(cfg.feature_capacity));
  if (prompt.n_train() == 0) throw ContractError("prompt has no train rows (no context)");
  if (prompt.n_train() > prompt.length()) throw DimensionError("prompt has more labels than rows");
  if (prompt.length() > cfg.max_prompt)
    throw CapacityError("prompt length " + std::to_string(prompt.length()) + " exceeds max_prompt " +
                        std::to_string(cfg.max_prompt));
  for (std::size_t y : prompt.y_train)
    if (y >= cfg.class_capacity)
      throw ContractError("label " + std::to_string(y) + " >= class_capacity " + std::to_string(cfg.class_capacity));
}

}  // namespace

ag::Var embed_inputs(const ModelConfig& cfg, const ParamVars& p, const Prompt& prompt) {
  check_prompt(cfg, prompt);
  ag::Var tokens = affine(ag::Var(prompt.x), p, "encoder.weight", "encoder.bias");
  ag::Var labels = ag::gather_rows(param(p, "label_embed"), prompt.y_train);
  if (prompt.n_test() > 0) labels = ag::vstack(labels, ag::Var(Matrix(prompt.n_test(), cfg.d_model)));
  return ag::add(tokens, labels);
}

ag::Var forward(const ModelConfig& cfg, const ParamVars& p, const Prompt& prompt, const ForwardOptions& opts) {
  cfg.validate();
  check_prompt(cfg, prompt);
  if (prompt.n_test() == 0) return ag::Var(Matrix(0, cfg.class_capacity));
  const std::size_t n = prompt.n_train(), N = prompt.length();
  ag::Var x = embed_inputs(cfg, p, prompt);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const std::string pre = "layers." + std::to_string(l) + ".";
    ag::Var h = ag::layer_norm(x, param(p, pre + "ln1.gain"), param(p, pre + "ln1.bias"));
    ag::Var q = ag::matmul(h, param(p, pre + "attn.wq"));
    ag::Var k = ag::matmul(h, param(p, pre + "attn.wk"));
    ag::Var v = ag::matmul(h, param(p, pre + "attn.wv"));
    ag::Var att = multi_head_attention(cfg, q, k, v, n, opts);
    x = ag::add(x, affine(att, p, pre + "attn.wo", pre + "attn.bo"));
    h = ag::layer_norm(x, param(p, pre + "ln2.gain"), param(p, pre + "ln2.bias"));
    h = ag::gelu(affine(h, p, pre + "mlp.w1", pre + "mlp.b1"));
    x = ag::add(x, affine(h, p, pre + "mlp.w2", pre + "mlp.b2"));
  }
  ag::Var t = ag::layer_norm(ag::row_slice(x, n, N), param(p, "final_ln.gain"), param(p, "final_ln.bias"));
  t = ag::gelu(affine(t, p, "head.w1", "head.b1"));
  return affine(t, p, "head.w2", "head.b2");
}

Matrix forward_logits(const ModelConfig& cfg, const TensorMap& params, const Prompt& prompt,
                      const ForwardOptions& opts) {
  return forward(cfg, as_constants(params), prompt, opts).value();
}

Matrix predict_proba(const Matrix& logits, std::size_t n_classes) {
  if (n_classes < 2) throw ContractError("predict_proba: n_classes must be >= 2");
  if (n_classes > logits.cols())
    throw CapacityError("predict_proba: " + std::to_string(n_classes) + " classes exceed class capacity " +
                        std::to_string(logits.cols()));
  return softmax_rows(col_slice(logits, 0, n_classes));
}

}  // namespace linpfn
