// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "linpfn/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "linpfn/metrics.hpp"
#include "linpfn/preprocess.hpp"

namespace linpfn {

std::string_view to_string(ModelChoice c) {
  switch (c) {
    case ModelChoice::S100: return "S100";
    case ModelChoice::L100: return "L100";
    case ModelChoice::H1K: return "H1K";
    case ModelChoice::H1K_with_projection: return "H1K_with_projection";
  }
  return "?";
}

ModelChoice parse_model_choice(std::string_view s) {
  for (ModelChoice c : {ModelChoice::S100, ModelChoice::L100, ModelChoice::H1K, ModelChoice::H1K_with_projection})
    if (s == to_string(c)) return c;
  throw ContractError("unknown model choice '" + std::string(s) + "' (expected S100, L100, H1K, H1K_with_projection)");
}

ModelChoice select_model(std::size_t n, std::size_t d, const RouterConfig& cfg) {
  if (n < 1 || d < 1) throw ContractError("select_model: n and d must be >= 1");
  if (n >= cfg.n_threshold && d <= cfg.d_threshold) return ModelChoice::L100;
  const double ratio = static_cast<double>(d) / static_cast<double>(n);
  if (d > cfg.d_threshold || (ratio >= cfg.ratio_threshold && n >= cfg.n_threshold))
    return d <= cfg.h1k_feature_cap ? ModelChoice::H1K : ModelChoice::H1K_with_projection;
  return ModelChoice::S100;
}

Router::Router(RouterConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.n_threshold < 1 || cfg_.d_threshold < 1 || !(cfg_.ratio_threshold > 0) || cfg_.h1k_feature_cap < 1)
    throw ContractError("router: thresholds must be positive");
}

Router Router::from_files(RouterConfig cfg, const std::string& fallback_path) {
  Router r(cfg);
  std::map<std::string, std::shared_ptr<const Checkpoint>> cache;
  auto load = [&](const std::string& path) {
    auto it = cache.find(path);
    if (it == cache.end()) it = cache.emplace(path, std::make_shared<const Checkpoint>(load_checkpoint(path))).first;
    return it->second;
  };
  auto resolve = [&](ModelChoice c, const std::string& path) {
    const std::string& p = path.empty() ? fallback_path : path;
    if (p.empty()) throw ContractError("router: no checkpoint given for " + std::string(to_string(c)));
    r.set(c, load(p));
  };
  resolve(ModelChoice::S100, cfg.s100_path);
  resolve(ModelChoice::L100, cfg.l100_path);
  resolve(ModelChoice::H1K, cfg.h1k_path);
  r.set(ModelChoice::H1K_with_projection, r.models_.at(ModelChoice::H1K));
  return r;
}

void Router::set(ModelChoice c, std::shared_ptr<const Checkpoint> ckpt) {
  if (!ckpt) throw ContractError("router: null checkpoint");
  models_[c] = std::move(ckpt);
}

void Router::set_all(std::shared_ptr<const Checkpoint> ckpt) {
  for (ModelChoice c : {ModelChoice::S100, ModelChoice::L100, ModelChoice::H1K, ModelChoice::H1K_with_projection})
    set(c, ckpt);
}

ModelChoice Router::choose(std::size_t n, std::size_t d) const { return forced_ ? *forced_ : algorithm_choice(n, d); }

const Checkpoint& Router::checkpoint(ModelChoice c) const {
  auto it = models_.find(c);
  if (it == models_.end()) throw StateError("router: no checkpoint loaded for " + std::string(to_string(c)));
  return *it->second;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

void check_classification(const TabularTask& task, const ModelConfig& cfg) {
  task.validate();
  if (task.n_test() == 0) throw ContractError("classify: test split is empty");
  if (task.n_classes > cfg.class_capacity)
    throw CapacityError("classify: task has " + std::to_string(task.n_classes) + " classes, model capacity is " +
                        std::to_string(cfg.class_capacity));
}

}  // namespace

ClassifyResult classify_with(const TabularTask& task, const Checkpoint& ckpt, const InferenceOptions& opts) {
  check_classification(task, ckpt.config);
  const PreprocessState state = fit_preprocess(task, ckpt.config.feature_capacity, opts.projection_seed);
  Prompt prompt{apply_preprocess(state, task.x), std::vector<std::size_t>(task.y_train().begin(), task.y_train().end())};

  ClassifyResult r;
  std::vector<double> times;
  Matrix logits;
  for (std::size_t rep = 0; rep < std::max<std::size_t>(1, opts.timing_repeats); ++rep) {
    attention::Cost cost;
    ForwardOptions fo{opts.precision, &cost};
    const auto t0 = std::chrono::steady_clock::now();
    logits = forward_logits(ckpt.config, ckpt.tensors, prompt, fo);
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    r.attention_cost = cost;
  }
  r.seconds = median(std::move(times));
  r.proba = predict_proba(logits, std::max<std::size_t>(task.n_classes, 2));
  r.accuracy = accuracy(r.proba, task.y_test());
  r.auc = roc_auc(r.proba, task.y_test());
  return r;
}

ClassifyResult classify(const TabularTask& task, const Router& router, const InferenceOptions& opts) {
  const ModelChoice algo = router.algorithm_choice(task.rows(), task.features());
  const ModelChoice choice = router.choose(task.rows(), task.features());
  ClassifyResult r = classify_with(task, router.checkpoint(choice), opts);
  r.choice = choice;
  r.algorithm_choice = algo;
  return r;
}

std::size_t bin_index(double y, double lo, double hi, std::size_t bins) {
  if (bins < 2) throw ContractError("bins must be >= 2");
  if (!(hi > lo)) throw ContractError("degenerate target range");
  const double t = (y - lo) / (hi - lo) * static_cast<double>(bins);
  if (!(t > 0)) return 0;
  return std::min(static_cast<std::size_t>(t), bins - 1);
}

RegressionResult regress_via_bins(const TabularTask& task, std::size_t bins, const BinClassifier& classifier) {
  if (bins < 2) throw ContractError("regress_via_bins: bins must be >= 2");
  if (task.targets.size() != task.rows()) throw ContractError("regress_via_bins: task has no real targets");
  if (task.n_train == 0) throw ContractError("regress_via_bins: train split is empty");
  if (task.n_test() == 0) throw ContractError("regress_via_bins: test split is empty");
  const auto train_t = std::span(task.targets).subspan(0, task.n_train);
  const auto [lo_it, hi_it] = std::minmax_element(train_t.begin(), train_t.end());
  RegressionResult r;
  r.lo = *lo_it;
  r.hi = *hi_it;
  r.bins = bins;
  if (!(r.hi > r.lo)) throw ContractError("regress_via_bins: constant train target gives a degenerate bin range");

  TabularTask binned = task;
  binned.kind = TaskKind::classification;
  binned.n_classes = bins;
  binned.labels.resize(task.rows());
  for (std::size_t i = 0; i < task.rows(); ++i) binned.labels[i] = bin_index(task.targets[i], r.lo, r.hi, bins);

  const Matrix proba = classifier(binned);
  if (proba.rows() != task.n_test() || proba.cols() != bins)
    throw DimensionError("regress_via_bins: classifier returned " + proba.shape() + ", expected " +
                         Matrix::shape_string(task.n_test(), bins));
  const double width = (r.hi - r.lo) / static_cast<double>(bins);
  std::vector<double> truth(task.n_test());
  r.predictions.assign(task.n_test(), 0.0);
  for (std::size_t i = 0; i < task.n_test(); ++i) {
    for (std::size_t b = 0; b < bins; ++b) r.predictions[i] += proba(i, b) * (r.lo + (static_cast<double>(b) + 0.5) * width);
    truth[i] = task.targets[task.n_train + i];
  }
  r.r2 = r2_score(r.predictions, truth);
  return r;
}

RegressionResult regress_via_bins(const TabularTask& task, const Router& router, std::size_t bins,
                                  const InferenceOptions& opts) {
  return regress_via_bins(task, bins, [&](const TabularTask& binned) { return classify(binned, router, opts).proba; });
}

}  // namespace linpfn
