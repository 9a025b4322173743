// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "linpfn/data_efficiency.hpp"

namespace linpfn {

std::string_view to_string(SamplerMethod m) {
  switch (m) {
    case SamplerMethod::k_centers: return "k_centers";
    case SamplerMethod::k_medoids: return "k_medoids";
    case SamplerMethod::uncertainty: return "uncertainty";
    case SamplerMethod::random: return "random";
  }
  return "?";
}

SamplerMethod parse_sampler_method(std::string_view s) {
  for (SamplerMethod m : {SamplerMethod::k_centers, SamplerMethod::k_medoids, SamplerMethod::uncertainty,
                          SamplerMethod::random})
    if (s == to_string(m)) return m;
  throw ContractError("unknown sampler '" + std::string(s) + "' (expected k_centers, k_medoids, uncertainty, random)");
}

namespace {

double distance(const Matrix& x, std::size_t a, std::size_t b) {
  double s = 0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    const double t = x(a, j) - x(b, j);
    s += t * t;
  }
  return std::sqrt(s);
}

void check_k(const Matrix& x, std::size_t k, const char* who) {
  if (k < 1 || k > x.rows())
    throw ContractError(std::string(who) + ": k = " + std::to_string(k) + " outside [1, " + std::to_string(x.rows()) +
                        "]");
}

}  // namespace

Matrix zscore_columns(const Matrix& x) {
  Matrix z = x;
  const auto n = static_cast<double>(x.rows());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double mean = 0, sq = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) mean += x(i, j);
    mean /= n;
    for (std::size_t i = 0; i < x.rows(); ++i) sq += (x(i, j) - mean) * (x(i, j) - mean);
    const double sd = std::sqrt(sq / n);
    for (std::size_t i = 0; i < x.rows(); ++i) z(i, j) = sd > 0 ? (x(i, j) - mean) / sd : 0.0;
  }
  return z;
}

std::vector<std::size_t> k_centers(const Matrix& x, std::size_t k, std::uint64_t seed) {
  check_k(x, k, "k_centers");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> centers{std::uniform_int_distribution<std::size_t>(0, x.rows() - 1)(rng)};
  std::vector<double> nearest(x.rows(), std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    const std::size_t last = centers.back();
    for (std::size_t i = 0; i < x.rows(); ++i) nearest[i] = std::min(nearest[i], distance(x, i, last));
    nearest[last] = -1;  // chosen rows are never picked again, even among duplicates
    centers.push_back(static_cast<std::size_t>(std::max_element(nearest.begin(), nearest.end()) - nearest.begin()));
  }
  return centers;
}

double coverage_radius(const Matrix& x, std::span<const std::size_t> centers) {
  if (centers.empty()) throw ContractError("coverage_radius: no centers");
  double r = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c : centers) best = std::min(best, distance(x, i, c));
    r = std::max(r, best);
  }
  return r;
}

KMedoidsResult k_medoids(const Matrix& x, std::size_t k, std::uint64_t seed, std::size_t max_passes) {
  check_k(x, k, "k_medoids");
  const std::size_t n = x.rows();
  std::vector<double> dist(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dist[i * n + j] = dist[j * n + i] = distance(x, i, j);
  auto d = [&](std::size_t a, std::size_t b) { return dist[a * n + b]; };

  // k-means++ seeding with D² weights
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> med{std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)};
  std::vector<char> is_med(n, 0);
  is_med[med[0]] = 1;
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = d(i, med[0]);
  while (med.size() < k) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = is_med[i] ? 0.0 : nearest[i] * nearest[i];
    std::size_t pick;
    if (std::accumulate(w.begin(), w.end(), 0.0) > 0) {
      pick = std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
    } else {
      pick = static_cast<std::size_t>(std::find(is_med.begin(), is_med.end(), 0) - is_med.begin());
    }
    med.push_back(pick);
    is_med[pick] = 1;
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], d(i, pick));
  }

  auto objective = [&](const std::vector<std::size_t>& m) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c : m) best = std::min(best, d(i, c));
      s += best;
    }
    return s;
  };

  KMedoidsResult res;
  double current = objective(med);
  res.objective.push_back(current);
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    bool improved = false;
    for (std::size_t slot = 0; slot < k; ++slot) {
      // distance to the nearest medoid other than the one in `slot`
      std::vector<double> others(n, std::numeric_limits<double>::infinity());
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t s = 0; s < k; ++s)
          if (s != slot) others[i] = std::min(others[i], d(i, med[s]));
      double best_cost = current;
      std::size_t best_cand = med[slot];
      for (std::size_t cand = 0; cand < n; ++cand) {
        if (is_med[cand]) continue;
        double cost = 0;
        for (std::size_t i = 0; i < n && cost < best_cost; ++i) cost += std::min(others[i], d(i, cand));
        if (cost < best_cost) {
          best_cost = cost;
          best_cand = cand;
        }
      }
      if (best_cand != med[slot]) {
        is_med[med[slot]] = 0;
        is_med[best_cand] = 1;
        med[slot] = best_cand;
        current = best_cost;
        improved = true;
      }
    }
    res.objective.push_back(current);
    if (!improved) break;
  }
  res.medoids = med;
  return res;
}

std::vector<double> neighbor_label_entropy(const Matrix& x, std::span<const std::size_t> labels, std::size_t k) {
  if (labels.size() != x.rows()) throw ContractError("neighbor_label_entropy: label count differs from row count");
  if (k < 1) throw ContractError("neighbor_label_entropy: k must be >= 1");
  const std::size_t n = x.rows(), kk = std::min(k, n > 0 ? n - 1 : 0);
  std::vector<double> h(n, 0.0);
  std::vector<std::pair<double, std::size_t>> nb;
  for (std::size_t i = 0; i < n; ++i) {
    nb.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) nb.emplace_back(distance(x, i, j), j);
    std::partial_sort(nb.begin(), nb.begin() + static_cast<std::ptrdiff_t>(kk), nb.end());
    std::map<std::size_t, double> counts;
    for (std::size_t t = 0; t < kk; ++t) counts[labels[nb[t].second]] += 1.0;
    for (const auto& [label, c] : counts) {
      const double p = c / static_cast<double>(kk);
      h[i] -= p * std::log(p);
    }
  }
  return h;
}

std::vector<std::size_t> select_rows(const Matrix& x_train, std::span<const std::size_t> y_train,
                                     const SamplerSpec& spec) {
  const std::size_t n = x_train.rows();
  if (spec.target_count < 1 || spec.target_count > n)
    throw ContractError("select_rows: target_count " + std::to_string(spec.target_count) + " outside [1, " +
                        std::to_string(n) + "]");
  std::vector<std::size_t> out;
  if (spec.target_count == n) {
    out.resize(n);
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  const Matrix z = zscore_columns(x_train);
  switch (spec.method) {
    case SamplerMethod::k_centers:
      out = k_centers(z, spec.target_count, spec.seed);
      break;
    case SamplerMethod::k_medoids:
      out = k_medoids(z, spec.target_count, spec.seed).medoids;
      break;
    case SamplerMethod::uncertainty: {
      const auto h = neighbor_label_entropy(z, y_train, spec.neighbor_k);
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return h[a] > h[b]; });
      out.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(spec.target_count));
      break;
    }
    case SamplerMethod::random: {
      out.resize(n);
      std::iota(out.begin(), out.end(), 0);
      std::mt19937_64 rng(spec.seed);
      std::shuffle(out.begin(), out.end(), rng);
      out.resize(spec.target_count);
      break;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

TabularTask subsample_task(const TabularTask& task, const SamplerSpec& spec) {
  const Matrix xt = task.x_train();
  const auto idx = select_rows(xt, task.y_train(), spec);
  return select_train_rows(task, idx);
}

}  // namespace linpfn
