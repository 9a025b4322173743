// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end inference: route a dataset to a checkpoint, preprocess, and run
// one forward pass over all test rows.

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "linpfn/checkpoint.hpp"
#include "linpfn/task.hpp"

namespace linpfn {

enum class ModelChoice { S100, L100, H1K, H1K_with_projection };

std::string_view to_string(ModelChoice c);
ModelChoice parse_model_choice(std::string_view s);

struct RouterConfig {
  std::size_t n_threshold = 3000;
  std::size_t d_threshold = 100;
  double ratio_threshold = 0.2;
  std::size_t h1k_feature_cap = 1000;
  std::string s100_path, l100_path, h1k_path;
};

/// Conditional model selection, branches evaluated in order:
/// large n with few features, then high-dimensional, then small datasets.
ModelChoice select_model(std::size_t n, std::size_t d, const RouterConfig& cfg = {});

/// Holds one checkpoint per routed model. The same checkpoint may serve
/// several choices (desk-scale setups usually have a single toy model).
class Router {
 public:
  explicit Router(RouterConfig cfg = {});
  /// Loads the checkpoint files named in the config; missing paths fall back to `fallback_path`.
  static Router from_files(RouterConfig cfg, const std::string& fallback_path = {});

  void set(ModelChoice c, std::shared_ptr<const Checkpoint> ckpt);
  void set_all(std::shared_ptr<const Checkpoint> ckpt);
  void force(std::optional<ModelChoice> c) { forced_ = c; }

  const RouterConfig& config() const { return cfg_; }
  ModelChoice algorithm_choice(std::size_t n, std::size_t d) const { return select_model(n, d, cfg_); }
  ModelChoice choose(std::size_t n, std::size_t d) const;
  const Checkpoint& checkpoint(ModelChoice c) const;
  std::optional<ModelChoice> forced() const { return forced_; }

 private:
  RouterConfig cfg_;
  std::map<ModelChoice, std::shared_ptr<const Checkpoint>> models_;
  std::optional<ModelChoice> forced_;
};

struct InferenceOptions {
  Precision precision = Precision::f64;
  std::uint64_t projection_seed = 0;
  /// Forward passes timed; `seconds` is their median.
  std::size_t timing_repeats = 1;
};

struct ClassifyResult {
  Matrix proba;  // n_test × n_classes
  double accuracy = 0;
  double auc = 0;
  double seconds = 0;  // forward pass only
  ModelChoice choice = ModelChoice::S100;
  ModelChoice algorithm_choice = ModelChoice::S100;
  attention::Cost attention_cost;
};

/// Classifies with an explicit checkpoint (no routing).
ClassifyResult classify_with(const TabularTask& task, const Checkpoint& ckpt, const InferenceOptions& opts = {});

/// Routes on (rows, features) of the whole dataset, then classifies.
ClassifyResult classify(const TabularTask& task, const Router& router, const InferenceOptions& opts = {});

/// Maps a binned classification task to bin probabilities (n_test × bins).
using BinClassifier = std::function<Matrix(const TabularTask& binned)>;

struct RegressionResult {
  std::vector<double> predictions;
  double r2 = 0;
  double lo = 0, hi = 0;  // train target range
  std::size_t bins = 0;
};

/// Uniform bins over the train target range; prediction is the
/// probability-weighted mean of bin midpoints. Test targets are clamped into
/// the train range for the R² computation only.
RegressionResult regress_via_bins(const TabularTask& task, std::size_t bins, const BinClassifier& classifier);
RegressionResult regress_via_bins(const TabularTask& task, const Router& router, std::size_t bins,
                                  const InferenceOptions& opts = {});

/// Bin index of y within [lo, hi] split into `bins` equal-width bins.
std::size_t bin_index(double y, double lo, double hi, std::size_t bins);

}  // namespace linpfn
