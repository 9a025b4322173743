// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic task generators used for pretraining and controlled evaluation.

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "linpfn/task.hpp"

namespace linpfn {

enum class PriorKind { mlp, blobs };
enum class Activation { identity, tanh, relu, sine };
enum class ClassBalance { quantile, random_threshold };

struct Range {
  std::size_t lo = 0, hi = 0;  // inclusive
  bool operator==(const Range&) const = default;
};

struct PriorSpec {
  PriorKind kind = PriorKind::mlp;
  std::size_t min_features = 1;
  std::size_t max_features = 10;
  std::size_t max_classes = 2;
  std::size_t prompt_len = 256;
  /// 0 draws the train count uniformly from [train_fraction_lo, train_fraction_hi] of prompt_len.
  std::size_t n_train = 0;
  double train_fraction_lo = 0.2;
  double train_fraction_hi = 0.8;
  Range depth_range{1, 3};
  Range width_range{8, 32};
  std::vector<Activation> activations{Activation::tanh, Activation::relu, Activation::sine};
  double feature_noise_std = 0.1;
  ClassBalance class_balance = ClassBalance::quantile;
  // blobs prior: centre separation drawn from [spread_lo, spread_hi], unit noise
  double spread_lo = 4.0;
  double spread_hi = 8.0;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const PriorSpec&) const = default;
};

std::string_view to_string(PriorKind k);
PriorKind parse_prior_kind(std::string_view s);
std::string_view to_string(Activation a);
Activation parse_activation(std::string_view s);
std::string_view to_string(ClassBalance b);
ClassBalance parse_class_balance(std::string_view s);

/// Deterministic in (spec, seed); `spec.seed` is not consulted.
TabularTask sample_task(const PriorSpec& spec, std::uint64_t seed);

/// Gaussian blobs with unit isotropic noise (scaled by `noise`), one centre
/// per class, centres pairwise at least `spread` apart. Labels are balanced
/// and shuffled. n_train = 0 puts half of the rows in the train split.
TabularTask sample_blobs(std::size_t n, std::size_t d, std::size_t n_classes, double spread, std::uint64_t seed,
                         std::size_t n_train = 0, double noise = 1.0);

/// Scalar output of an MLP prior draw before discretization; exposed for tests.
struct MlpDraw {
  Matrix x_clean;
  std::vector<double> output;
};
MlpDraw sample_mlp_outputs(const PriorSpec& spec, std::size_t rows, std::size_t d, std::uint64_t seed);

/// 64-bit mixing of several values into one seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0);

}  // namespace linpfn
