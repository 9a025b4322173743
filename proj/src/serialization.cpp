// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "linpfn/serialization.hpp"

namespace linpfn {

using nlohmann::json;
using json_detail::field;
using json_detail::field_or;

json to_json(const ModelConfig& c) {
  return json{{"d_model", c.d_model},
              {"n_layers", c.n_layers},
              {"n_heads", c.n_heads},
              {"feature_capacity", c.feature_capacity},
              {"class_capacity", c.class_capacity},
              {"max_prompt", c.max_prompt},
              {"attention_variant", std::string(attention::to_string(c.attention_variant))},
              {"causal_ablation", c.causal_ablation},
              {"hidden_mult", c.hidden_mult},
              {"block_size", c.block_size}};
}

ModelConfig model_config_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw FormatError(path, "expected an object");
  ModelConfig c;
  c.d_model = field<std::size_t>(j, "d_model", path);
  c.n_layers = field<std::size_t>(j, "n_layers", path);
  c.n_heads = field<std::size_t>(j, "n_heads", path);
  c.feature_capacity = field<std::size_t>(j, "feature_capacity", path);
  c.class_capacity = field<std::size_t>(j, "class_capacity", path);
  c.max_prompt = field<std::size_t>(j, "max_prompt", path);
  try {
    c.attention_variant = attention::parse_variant(field<std::string>(j, "attention_variant", path));
  } catch (const ContractError& e) {
    throw FormatError(path + ".attention_variant", e.what());
  }
  c.causal_ablation = field<bool>(j, "causal_ablation", path);
  c.hidden_mult = field<std::size_t>(j, "hidden_mult", path);
  c.block_size = field<std::size_t>(j, "block_size", path);
  try {
    c.validate();
  } catch (const ContractError& e) {
    throw FormatError(path, e.what());
  }
  return c;
}

json to_json(const PriorSpec& s) {
  json acts = json::array();
  for (Activation a : s.activations) acts.push_back(std::string(to_string(a)));
  return json{{"kind", std::string(to_string(s.kind))},
              {"min_features", s.min_features},
              {"max_features", s.max_features},
              {"max_classes", s.max_classes},
              {"prompt_len", s.prompt_len},
              {"n_train", s.n_train},
              {"train_fraction_lo", s.train_fraction_lo},
              {"train_fraction_hi", s.train_fraction_hi},
              {"depth_range", {s.depth_range.lo, s.depth_range.hi}},
              {"width_range", {s.width_range.lo, s.width_range.hi}},
              {"activations", acts},
              {"feature_noise_std", s.feature_noise_std},
              {"class_balance", std::string(to_string(s.class_balance))},
              {"spread_lo", s.spread_lo},
              {"spread_hi", s.spread_hi},
              {"seed", s.seed}};
}

PriorSpec prior_spec_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw FormatError(path, "expected an object");
  PriorSpec s;
  try {
    s.kind = parse_prior_kind(field_or<std::string>(j, "kind", path, std::string(to_string(s.kind))));
    s.class_balance =
        parse_class_balance(field_or<std::string>(j, "class_balance", path, std::string(to_string(s.class_balance))));
    if (j.contains("activations")) {
      s.activations.clear();
      for (const auto& a : field<std::vector<std::string>>(j, "activations", path))
        s.activations.push_back(parse_activation(a));
    }
  } catch (const ContractError& e) {
    throw FormatError(path, e.what());
  }
  s.min_features = field_or(j, "min_features", path, s.min_features);
  s.max_features = field_or(j, "max_features", path, s.max_features);
  s.max_classes = field_or(j, "max_classes", path, s.max_classes);
  s.prompt_len = field_or(j, "prompt_len", path, s.prompt_len);
  s.n_train = field_or(j, "n_train", path, s.n_train);
  s.train_fraction_lo = field_or(j, "train_fraction_lo", path, s.train_fraction_lo);
  s.train_fraction_hi = field_or(j, "train_fraction_hi", path, s.train_fraction_hi);
  auto range = [&](const char* key, Range fallback) {
    if (!j.contains(key)) return fallback;
    auto v = field<std::vector<std::size_t>>(j, key, path);
    if (v.size() != 2) throw FormatError(path + "." + key, "expected [lo, hi]");
    return Range{v[0], v[1]};
  };
  s.depth_range = range("depth_range", s.depth_range);
  s.width_range = range("width_range", s.width_range);
  s.feature_noise_std = field_or(j, "feature_noise_std", path, s.feature_noise_std);
  s.spread_lo = field_or(j, "spread_lo", path, s.spread_lo);
  s.spread_hi = field_or(j, "spread_hi", path, s.spread_hi);
  s.seed = field_or(j, "seed", path, s.seed);
  try {
    s.validate();
  } catch (const ContractError& e) {
    throw FormatError(path, e.what());
  }
  return s;
}

}  // namespace linpfn
