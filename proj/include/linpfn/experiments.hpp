// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment drivers behind the CLI verbs. Each returns a record that echoes
// its resolved configuration and serializes to JSON and CSV.

#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "linpfn/data_efficiency.hpp"
#include "linpfn/pipeline.hpp"
#include "linpfn/prior.hpp"

namespace linpfn {

struct ExperimentRecord {
  std::string id;
  nlohmann::json config = nlohmann::json::object();
  std::vector<nlohmann::json> rows;  // flat objects of scalars
  nlohmann::json environment = nlohmann::json::object();
  nlohmann::json summary = nlohmann::json::object();
  std::string timestamp;

  nlohmann::json to_json() const;
  static ExperimentRecord from_json(const nlohmann::json& j);
  /// Header is the union of row keys in first-seen order; missing cells are empty.
  std::string to_csv() const;
  std::vector<std::string> columns() const;
};

/// UTC, ISO 8601 to the second.
std::string utc_timestamp();

nlohmann::json environment_note(std::size_t threads, Precision precision);

/// Ordinary least squares fit y ≈ a + b·x and its R².
struct LinearFit {
  double intercept = 0, slope = 0, r2 = 0;
};
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

struct BenchAttentionConfig {
  std::vector<std::size_t> ns{256, 512, 1024, 2048, 4096};
  std::size_t d = 64;
  std::vector<std::size_t> blocks{64};
  std::vector<attention::Variant> variants{attention::Variant::softmax, attention::Variant::linear_blocked,
                                           attention::Variant::linear_causal_blocked};
  bool normalize = false;
  double train_fraction = 0.5;  // pfn variants only
  std::size_t repeats = 3;
  std::uint64_t seed = 0;
  Precision precision = Precision::f64;
};
nlohmann::json to_json(const BenchAttentionConfig& c);

/// Per (variant, N, B): median wall time, instrumented counters, closed-form
/// counters and whether they agree.
ExperimentRecord bench_attention(const BenchAttentionConfig& cfg);

struct CausalAblationConfig {
  std::vector<std::size_t> contexts{8, 16, 32, 64, 128, 256, 512};
  std::size_t tasks = 20;
  std::size_t test_rows = 1000;
  PriorSpec prior;  // task family; prompt_len and n_train are overridden
  std::uint64_t seed = 0;
  Precision precision = Precision::f64;
};
nlohmann::json to_json(const CausalAblationConfig& c);

/// Accuracy versus context length for both models on shared tasks. Each task
/// is drawn once with max(contexts) train rows; shorter contexts use a prefix
/// of them and the same test rows. Rows: curve, context, accuracy, auc.
ExperimentRecord ablate_causal(const Checkpoint& non_causal, const Checkpoint& causal,
                               const CausalAblationConfig& cfg);

struct DimsAblationConfig {
  std::vector<double> fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<ReducerMethod> reducers{ReducerMethod::pca, ReducerMethod::svd, ReducerMethod::random_projection};
  std::size_t splits = 3;
  double test_fraction = 0.5;
  std::uint64_t seed = 0;
  InferenceOptions inference;
};
nlohmann::json to_json(const DimsAblationConfig& c);

/// AUC/time per reducer and retained-dimension fraction, plus a `none` baseline per split.
ExperimentRecord ablate_dims(const TabularTask& data, const Checkpoint& ckpt, const DimsAblationConfig& cfg);

struct SamplingAblationConfig {
  std::vector<double> fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<SamplerMethod> samplers{SamplerMethod::k_centers, SamplerMethod::k_medoids, SamplerMethod::uncertainty,
                                      SamplerMethod::random};
  std::size_t splits = 3;
  double test_fraction = 0.5;
  std::size_t neighbor_k = 10;
  std::uint64_t seed = 0;
  InferenceOptions inference;
};
nlohmann::json to_json(const SamplingAblationConfig& c);

/// AUC/time per sampler and train fraction, plus a `none` baseline per split.
ExperimentRecord ablate_sampling(const TabularTask& data, const Checkpoint& ckpt, const SamplingAblationConfig& cfg);

struct ScalingAblationConfig {
  std::vector<std::size_t> ns{1000, 2000, 3000, 4000, 5000, 6000, 7000, 8000, 9000, 10000, 11000, 12000};
  std::size_t d = 50;
  double test_fraction = 0.5;
  std::size_t repeats = 3;
  std::uint64_t seed = 0;
  Precision precision = Precision::f64;
};
nlohmann::json to_json(const ScalingAblationConfig& c);

/// Accuracy and median forward time versus n on two-class blob data. The
/// summary holds the linear and pure-quadratic fits of time against n.
ExperimentRecord ablate_scaling(const Checkpoint& ckpt, const ScalingAblationConfig& cfg);

struct EvalConfig {
  std::string dataset = "dataset";
  std::size_t splits = 10;
  double test_fraction = 0.5;
  bool regression = false;
  std::size_t bins = 10;
  std::uint64_t seed = 0;
  InferenceOptions inference;
};
nlohmann::json to_json(const EvalConfig& c);

/// Classifies (or regresses via bins) `splits` seeded train/test splits of `data`.
ExperimentRecord evaluate(const TabularTask& data, const Router& router, const EvalConfig& cfg);

}  // namespace linpfn
