// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "linpfn/prior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace linpfn {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return splitmix(splitmix(splitmix(a) ^ b) ^ c);
}

std::string_view to_string(PriorKind k) { return k == PriorKind::mlp ? "mlp" : "blobs"; }

PriorKind parse_prior_kind(std::string_view s) {
  if (s == "mlp") return PriorKind::mlp;
  if (s == "blobs") return PriorKind::blobs;
  throw ContractError("unknown prior kind '" + std::string(s) + "'");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::sine: return "sine";
  }
  return "unknown";
}

Activation parse_activation(std::string_view s) {
  for (Activation a : {Activation::identity, Activation::tanh, Activation::relu, Activation::sine})
    if (to_string(a) == s) return a;
  throw ContractError("unknown activation '" + std::string(s) + "'");
}

std::string_view to_string(ClassBalance b) {
  return b == ClassBalance::quantile ? "quantile" : "random_threshold";
}

ClassBalance parse_class_balance(std::string_view s) {
  if (s == "quantile") return ClassBalance::quantile;
  if (s == "random_threshold") return ClassBalance::random_threshold;
  throw ContractError("unknown class balance '" + std::string(s) + "'");
}

void PriorSpec::validate() const {
  if (prompt_len < 4) throw ContractError("prior: prompt_len must be >= 4");
  if (max_classes < 2) throw ContractError("prior: max_classes must be >= 2");
  if (min_features < 1 || min_features > max_features)
    throw ContractError("prior: need 1 <= min_features <= max_features");
  if (depth_range.lo > depth_range.hi) throw ContractError("prior: empty depth_range");
  if (width_range.lo < 1 || width_range.lo > width_range.hi) throw ContractError("prior: empty width_range");
  if (activations.empty()) throw ContractError("prior: activation set is empty");
  if (n_train >= prompt_len) throw ContractError("prior: n_train must be < prompt_len");
  if (!(train_fraction_lo > 0 && train_fraction_lo <= train_fraction_hi && train_fraction_hi < 1))
    throw ContractError("prior: train fractions must satisfy 0 < lo <= hi < 1");
  if (feature_noise_std < 0) throw ContractError("prior: feature_noise_std must be >= 0");
  if (!(spread_lo > 0 && spread_lo <= spread_hi)) throw ContractError("prior: invalid spread range");
}

namespace {

std::size_t uniform_count(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::tanh: return std::tanh(x);
    case Activation::relu: return x > 0 ? x : 0.0;
    case Activation::sine: return std::sin(x);
  }
  return x;
}

std::vector<std::size_t> quantile_classes(std::span<const double> out, std::size_t n_classes) {
  std::vector<std::size_t> order(out.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return out[a] < out[b]; });
  std::vector<std::size_t> cls(out.size());
  for (std::size_t r = 0; r < order.size(); ++r) cls[order[r]] = r * n_classes / order.size();
  return cls;
}

std::vector<std::size_t> threshold_classes(std::span<const double> out, std::span<const double> thresholds) {
  std::vector<std::size_t> cls(out.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    cls[i] = static_cast<std::size_t>(std::upper_bound(thresholds.begin(), thresholds.end(), out[i]) -
                                      thresholds.begin());
  return cls;
}

bool every_class_in_train(std::span<const std::size_t> cls, std::size_t n_train, std::size_t n_classes) {
  std::vector<bool> seen(n_classes, false);
  for (std::size_t i = 0; i < n_train; ++i) seen[cls[i]] = true;
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

}  // namespace

MlpDraw sample_mlp_outputs(const PriorSpec& spec, std::size_t rows, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  MlpDraw draw;
  draw.x_clean = Matrix(rows, d);
  for (auto& v : draw.x_clean.values()) v = unit(rng);

  Matrix h = draw.x_clean;
  const std::size_t depth = uniform_count(rng, spec.depth_range.lo, spec.depth_range.hi);
  for (std::size_t l = 0; l < depth; ++l) {
    const std::size_t width = uniform_count(rng, spec.width_range.lo, spec.width_range.hi);
    const Activation act = spec.activations[uniform_count(rng, 0, spec.activations.size() - 1)];
    std::normal_distribution<double> w_dist(0.0, 1.0 / std::sqrt(static_cast<double>(h.cols())));
    Matrix w(h.cols(), width), b(1, width);
    for (auto& v : w.values()) v = w_dist(rng);
    for (auto& v : b.values()) v = 0.5 * unit(rng);
    h = add_row(matmul(h, w), b);
    for (auto& v : h.values()) v = activate(act, v);
  }
  std::normal_distribution<double> w_dist(0.0, 1.0 / std::sqrt(static_cast<double>(h.cols())));
  Matrix w(h.cols(), 1);
  for (auto& v : w.values()) v = w_dist(rng);
  Matrix out = matmul(h, w);
  draw.output.assign(out.values().begin(), out.values().end());
  return draw;
}

TabularTask sample_task(const PriorSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(mix_seed(seed, 0x7072696f72ULL));
  const std::size_t d = uniform_count(rng, spec.min_features, spec.max_features);
  const std::size_t C = uniform_count(rng, 2, spec.max_classes);
  const std::size_t N = spec.prompt_len;
  std::size_t n_train = spec.n_train;
  if (n_train == 0) {
    const auto lo = static_cast<std::size_t>(std::ceil(spec.train_fraction_lo * static_cast<double>(N)));
    const auto hi = static_cast<std::size_t>(std::floor(spec.train_fraction_hi * static_cast<double>(N)));
    n_train = uniform_count(rng, std::max<std::size_t>(lo, 1), std::max(std::min(hi, N - 1), std::max<std::size_t>(lo, 1)));
  }
  const std::uint64_t body_seed = rng();

  if (spec.kind == PriorKind::blobs) {
    const double spread = std::uniform_real_distribution<double>(spec.spread_lo, spec.spread_hi)(rng);
    return sample_blobs(N, d, C, spread, body_seed, n_train);
  }

  MlpDraw draw = sample_mlp_outputs(spec, N, d, body_seed);
  std::mt19937_64 lab_rng(mix_seed(body_seed, 1));
  std::vector<std::size_t> cls;
  if (spec.class_balance == ClassBalance::random_threshold) {
    std::vector<double> sorted = draw.output;
    std::sort(sorted.begin(), sorted.end());
    std::uniform_real_distribution<double> level(0.0, 1.0);
    for (int attempt = 0; attempt < 10 && cls.empty(); ++attempt) {
      std::vector<double> thresholds;
      for (std::size_t k = 0; k + 1 < C; ++k) {
        const auto idx = static_cast<std::size_t>(level(lab_rng) * static_cast<double>(N - 1));
        thresholds.push_back(sorted[idx]);
      }
      std::sort(thresholds.begin(), thresholds.end());
      auto candidate = threshold_classes(draw.output, thresholds);
      if (every_class_in_train(candidate, n_train, C)) cls = std::move(candidate);
    }
  }
  if (cls.empty()) cls = quantile_classes(draw.output, C);

  std::vector<std::size_t> relabel(C);
  std::iota(relabel.begin(), relabel.end(), 0);
  std::shuffle(relabel.begin(), relabel.end(), lab_rng);

  TabularTask task;
  task.kind = TaskKind::classification;
  task.n_classes = C;
  task.n_train = n_train;
  task.x = draw.x_clean;
  std::normal_distribution<double> noise(0.0, spec.feature_noise_std);
  if (spec.feature_noise_std > 0)
    for (auto& v : task.x.values()) v += noise(lab_rng);
  task.labels.resize(N);
  for (std::size_t i = 0; i < N; ++i) task.labels[i] = relabel[cls[i]];
  return task;
}

TabularTask sample_blobs(std::size_t n, std::size_t d, std::size_t n_classes, double spread, std::uint64_t seed,
                         std::size_t n_train, double noise) {
  if (n_classes < 2) throw ContractError("sample_blobs: need at least 2 classes");
  if (n_classes > n) throw ContractError("sample_blobs: more classes than rows");
  if (d < 1) throw ContractError("sample_blobs: need at least one feature");
  if (!(spread >= 0)) throw ContractError("sample_blobs: spread must be >= 0");
  if (n_train > n) throw ContractError("sample_blobs: n_train exceeds n");
  if (n_train == 0) n_train = n / 2;

  std::mt19937_64 rng(seed);
  const double side =
      std::max(1.0, spread) * std::max(2.0, 2.0 * std::pow(static_cast<double>(n_classes), 1.0 / static_cast<double>(d)));
  std::uniform_real_distribution<double> coord(-side / 2, side / 2);
  Matrix centres(n_classes, d);
  bool packed = false;
  for (int attempt = 0; attempt < 100 && !packed; ++attempt) {
    for (auto& v : centres.values()) v = coord(rng);
    packed = true;
    for (std::size_t a = 0; a < n_classes && packed; ++a)
      for (std::size_t b = a + 1; b < n_classes && packed; ++b) {
        double dist2 = 0;
        for (std::size_t c = 0; c < d; ++c) dist2 += (centres(a, c) - centres(b, c)) * (centres(a, c) - centres(b, c));
        packed = dist2 >= spread * spread;
      }
  }
  if (!packed) throw Error("sample_blobs: could not place " + std::to_string(n_classes) + " centres at spread " +
                           std::to_string(spread) + " in " + std::to_string(d) + " dims after 100 tries");

  TabularTask task;
  task.kind = TaskKind::classification;
  task.n_classes = n_classes;
  task.n_train = n_train;
  task.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) task.labels[i] = i % n_classes;
  std::shuffle(task.labels.begin(), task.labels.end(), rng);
  std::normal_distribution<double> unit(0.0, noise);
  task.x = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) task.x(i, c) = centres(task.labels[i], c) + unit(rng);
  return task;
}

}  // namespace linpfn
