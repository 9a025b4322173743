// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

// Checkpoint file layout:
//   "TFLX1" | u64 little-endian header length | UTF-8 JSON header | tensor data
// The header carries the model config, a tensor manifest (name, shape, byte
// offset into the data section) and training provenance. Tensor data is
// little-endian f32 in manifest order.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "linpfn/model.hpp"

namespace linpfn {

inline constexpr std::string_view kCheckpointMagic = "TFLX1";

struct Provenance {
  std::uint64_t prior_seed = 0;
  std::size_t steps = 0;
  std::vector<double> loss_curve;
  nlohmann::json info = nlohmann::json::object();  // resolved training config echo

  bool operator==(const Provenance&) const = default;
};

struct Checkpoint {
  ModelConfig config;
  TensorMap tensors;        // parameters, exactly parameter_specs(config)
  TensorMap optimizer;      // optional Adam moments, named "adam.m.<param>" / "adam.v.<param>"
  Provenance provenance;

  /// Every architecture tensor present with its expected shape.
  void validate() const;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace linpfn
