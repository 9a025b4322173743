// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

// Two-segment tabular transformer. A prompt is a sequence of train tokens
// (features plus label) followed by test tokens (features only); every
// attention layer lets all positions attend to the train segment, and logits
// are read only at test positions.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "linpfn/attention.hpp"
#include "linpfn/autograd.hpp"
#include "linpfn/matrix.hpp"

namespace linpfn {

enum class Precision { f32, f64 };

Precision parse_precision(std::string_view s);
std::string_view to_string(Precision p);

struct ModelConfig {
  std::size_t d_model = 64;
  std::size_t n_layers = 3;
  std::size_t n_heads = 4;
  std::size_t feature_capacity = 100;
  std::size_t class_capacity = 10;
  std::size_t max_prompt = 1152;
  attention::Variant attention_variant = attention::Variant::pfn_linear;
  bool causal_ablation = false;
  std::size_t hidden_mult = 2;
  std::size_t block_size = attention::kDefaultBlockSize;

  /// Throws ContractError describing the first violated invariant.
  void validate() const;
  std::size_t d_head() const { return d_model / n_heads; }
  bool operator==(const ModelConfig&) const = default;
};

/// Named presets: toy-s (desk scale) and s100, l100, h1k (full-scale shapes).
ModelConfig model_preset(std::string_view name);
std::vector<std::string> model_preset_names();

using TensorMap = std::map<std::string, Matrix>;

struct TensorSpec {
  std::string name;
  std::size_t rows, cols;
};

/// Every parameter of the architecture, in canonical (file) order.
std::vector<TensorSpec> parameter_specs(const ModelConfig& cfg);

/// Gaussian 1/√fan_in projections, zero biases, unit norm gains, N(0, 1)
/// label table. Values are rounded to f32 so they survive a checkpoint write.
TensorMap init_parameters(const ModelConfig& cfg, std::uint64_t seed);

/// Rounds every entry to the nearest float.
void round_to_f32(Matrix& m);

/// Rows [0, n) of `x` are train tokens with labels `y_train`; the rest are test tokens.
/// Feature rows must already be padded to feature_capacity.
struct Prompt {
  Matrix x;
  std::vector<std::size_t> y_train;

  std::size_t n_train() const { return y_train.size(); }
  std::size_t n_test() const { return x.rows() - y_train.size(); }
  std::size_t length() const { return x.rows(); }
};

Prompt make_prompt(const Matrix& x_train, std::span<const std::size_t> y_train, const Matrix& x_test);

struct ForwardOptions {
  /// Element type of the attention kernels on the inference path.
  Precision precision = Precision::f64;
  /// Accumulates the instrumented attention counters of the inference path.
  attention::Cost* cost = nullptr;
};

/// Parameter handles; tape leaves for training, plain constants for inference.
using ParamVars = std::map<std::string, ag::Var>;

/// Token embeddings ((n+m) × d_model): FeatureProj(x) plus LabelEmbed(y) on train rows.
ag::Var embed_inputs(const ModelConfig& cfg, const ParamVars& p, const Prompt& prompt);

/// Logits (m × class_capacity) at test positions. When the parameters are tape
/// leaves the pass is recorded with composite attention primitives; otherwise
/// attention runs through the instrumented pfn kernels.
ag::Var forward(const ModelConfig& cfg, const ParamVars& p, const Prompt& prompt,
                const ForwardOptions& opts = {});

/// Inference convenience over a tensor map.
Matrix forward_logits(const ModelConfig& cfg, const TensorMap& params, const Prompt& prompt,
                      const ForwardOptions& opts = {});

/// Softmax over the first n_classes logit columns, rows renormalized.
Matrix predict_proba(const Matrix& logits, std::size_t n_classes);

ParamVars as_constants(const TensorMap& params);

}  // namespace linpfn
