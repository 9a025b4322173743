// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "linpfn/checkpoint.hpp"
#include "linpfn/prior.hpp"

namespace linpfn {

struct TrainConfig {
  std::size_t batch_size = 8;
  std::size_t steps_per_epoch = 1000;
  std::size_t epochs = 1;
  double learning_rate = 3e-5;
  double warmup_fraction = 0.05;
  double grad_clip_norm = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  PriorSpec prior;
  ModelConfig model;
  std::uint64_t seed = 0;
  /// Worker threads for the per-task forward/backward passes. Results do not
  /// depend on this value: per-task gradients are reduced in task order.
  std::size_t threads = 1;

  std::size_t total_steps() const { return steps_per_epoch * epochs; }
  void validate() const;
};

/// Training presets: toy-s (blob prior), toy-s-mlp (random-MLP prior), and
/// full-scale s100, l100, h1k.
TrainConfig train_preset(std::string_view name);

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, const std::string& path = "train");

struct StepRecord {
  std::size_t step = 0;
  double loss = 0;
  double grad_norm = 0;  // after clipping
  double lr = 0;
};

/// Learning rate at 0-based `step`: linear warmup over the first
/// warmup_fraction of total steps, then constant.
double learning_rate_at(const TrainConfig& c, std::size_t step);

/// Mean cross-entropy over rows using the first n_classes logits. m = 0 is a ContractError.
double cross_entropy_loss(const Matrix& logits, std::span<const std::size_t> labels, std::size_t n_classes);

struct TrainOptions {
  /// Continue from this checkpoint (its provenance step count and optimizer state).
  std::optional<Checkpoint> resume;
  /// Stop after this many total steps (0 = run to total_steps()).
  std::size_t stop_at = 0;
  std::function<void(const StepRecord&)> on_step;
};

struct TrainResult {
  Checkpoint checkpoint;  // includes optimizer moments
  std::vector<StepRecord> curve;
};

/// Seed of task `index` in batch `step`.
std::uint64_t task_seed(std::uint64_t seed, std::size_t step, std::size_t index);

/// Prior task preprocessed to the model's feature capacity, as a prompt plus test labels.
struct TrainingExample {
  Prompt prompt;
  std::vector<std::size_t> y_test;
  std::size_t n_classes = 0;
};
TrainingExample make_training_example(const TrainConfig& c, std::uint64_t seed);

TrainResult train(const TrainConfig& config, const TrainOptions& options = {});

/// CSV with header step,loss,grad_norm,lr.
std::string loss_curve_csv(std::span<const StepRecord> curve);

}  // namespace linpfn
