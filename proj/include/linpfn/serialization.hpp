// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

// JSON forms of the configuration types. Readers throw FormatError naming the
// offending field path.

#pragma once

#include <string>

#include "json.hpp"
#include "linpfn/model.hpp"
#include "linpfn/prior.hpp"

namespace linpfn {

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j, const std::string& path = "config");

nlohmann::json to_json(const PriorSpec& s);
PriorSpec prior_spec_from_json(const nlohmann::json& j, const std::string& path = "prior");

namespace json_detail {

template <typename T>
T field(const nlohmann::json& j, const std::string& key, const std::string& path) {
  const std::string where = path + "." + key;
  if (!j.is_object() || !j.contains(key)) throw FormatError(where, "missing field");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where, e.what());
  }
}

template <typename T>
T field_or(const nlohmann::json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return field<T>(j, key, path);
}

}  // namespace json_detail

}  // namespace linpfn
