// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

// Single-head attention kernels with software cost accounting.
//
// Slow memory is modeled explicitly: every matrix element that crosses the
// boundary between the N×D operands and a B×D working tile is counted as a
// load or a store. Tiles of the last (partial) block are zero padded on chip,
// so per-block FLOP charges always use the full block size B while transfer
// counts use the rows that actually exist. With that convention the blocked
// kernels move exactly 5·N·D elements for any B, and their FLOP counters are
// exact multiples of ⌈N/B⌉.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "linpfn/errors.hpp"
#include "linpfn/matrix.hpp"

namespace linpfn::attention {

inline constexpr std::size_t kDefaultBlockSize = 64;
inline constexpr double kDefaultEps = 1e-6;

enum class Variant {
  softmax,
  linear_naive,
  linear_blocked,
  linear_causal_blocked,
  pfn_linear,
  pfn_softmax,
};

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::softmax: return "softmax";
    case Variant::linear_naive: return "linear_naive";
    case Variant::linear_blocked: return "linear_blocked";
    case Variant::linear_causal_blocked: return "linear_causal_blocked";
    case Variant::pfn_linear: return "pfn_linear";
    case Variant::pfn_softmax: return "pfn_softmax";
  }
  return "unknown";
}

inline Variant parse_variant(std::string_view s) {
  for (Variant v : {Variant::softmax, Variant::linear_naive, Variant::linear_blocked,
                    Variant::linear_causal_blocked, Variant::pfn_linear, Variant::pfn_softmax}) {
    if (to_string(v) == s) return v;
  }
  throw ContractError("unknown attention variant '" + std::string(s) + "'");
}

struct Cost {
  std::uint64_t slow_loads = 0;
  std::uint64_t slow_stores = 0;
  std::uint64_t peak_slow_memory = 0;
  std::uint64_t flops = 0;

  std::uint64_t accesses() const { return slow_loads + slow_stores; }
  bool operator==(const Cost&) const = default;
  Cost& operator+=(const Cost& o) {
    slow_loads += o.slow_loads;
    slow_stores += o.slow_stores;
    peak_slow_memory += o.peak_slow_memory;
    flops += o.flops;
    return *this;
  }
};

/// Non-owning read-only view of a row-major matrix.
template <typename T>
struct View {
  const T* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  View() = default;
  View(const BasicMatrix<T>& m) : data(m.data()), rows(m.rows()), cols(m.cols()) {}  // NOLINT
  const T* row(std::size_t r) const { return data + r * cols; }
  T operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

template <typename T>
struct Request {
  View<T> q, k, v;
  Variant variant = Variant::linear_blocked;
  std::size_t block_size = kDefaultBlockSize;
  std::size_t n_train = 0;  // pfn variants: keys/values are rows [0, n_train)
  bool normalize = false;
  bool causal = false;  // pfn variants: causal mask inside the train segment only
  T eps = T(kDefaultEps);
  T scale = T(1);  // softmax logit multiplier
};

template <typename T>
struct Result {
  BasicMatrix<T> output;
  Cost cost;
  std::vector<std::string> warnings;
};

/// Inputs to the closed-form cost model.
struct CostQuery {
  Variant variant = Variant::linear_blocked;
  std::uint64_t n = 0;
  std::uint64_t d = 0;
  std::uint64_t block = kDefaultBlockSize;
  std::uint64_t n_train = 0;
  bool normalize = false;
  bool causal = false;
};

namespace detail {

inline std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

// Per-block FLOPs of the non-causal blocked kernel: BD + 4BD².
inline std::uint64_t blocked_kv_flops(std::uint64_t B, std::uint64_t D, bool normalize) {
  // φ(K_i): BD, S ← S + K_iᵀV_i: (2B−1)D² + D², z ← z + colsum: BD
  return B * D + 2 * B * D * D + (normalize ? B * D : 0);
}
inline std::uint64_t blocked_q_flops(std::uint64_t B, std::uint64_t D, bool normalize) {
  // φ(Q_j): BD, Q_jS: BD(2D−1); normalized: Q_j z: B(2D−1), +ε: B, divide: BD
  return B * D + B * D * (2 * D - 1) + (normalize ? B * (2 * D - 1) + B + B * D : 0);
}
// Per-block FLOPs of the causal blocked kernel: 4B²D + 2BD + 4BD².
inline std::uint64_t causal_block_flops(std::uint64_t B, std::uint64_t D, bool normalize) {
  std::uint64_t f = 2 * B * D;           // φ(K_j), φ(Q_j)
  f += B * B * (2 * D - 1);              // Q_jK_jᵀ
  f += B * B;                            // ⊙ M
  f += B * D * (2 * D - 1) + B * D;      // O_j += Q_jS
  f += B * D * (2 * B - 1) + B * D;      // O_j += (·)V_j
  f += (2 * B - 1) * D * D + D * D;      // S ← S + K_jᵀV_j
  if (normalize) {
    f += B * (2 * D - 1);  // Q_j z
    f += B * (B - 1);      // masked row sums
    f += 2 * B;            // combine, +ε
    f += B * D;            // divide
    f += B * D;            // z ← z + colsum φ(K_j)
  }
  return f;
}

inline std::uint64_t softmax_flops(std::uint64_t nq, std::uint64_t nk, std::uint64_t D, bool masked) {
  std::uint64_t f = nq * nk * (2 * D - 1);  // QKᵀ
  f += nq * nk;                             // scale
  if (masked) f += nq * nk;                 // mask
  f += nq * (nk - 1) + nq * nk + nq * nk + nq * (nk - 1) + nq * nk;  // max, sub, exp, sum, div
  f += nq * D * (2 * nk - 1);               // PV
  return f;
}

}  // namespace detail

/// Closed-form counters; equal to the instrumented counters of the matching kernel.
inline Cost cost_model(const CostQuery& q) {
  if (q.n < 1 || q.d < 1 || q.block < 1) throw ContractError("cost_model: N, D, B must be >= 1");
  const std::uint64_t N = q.n, D = q.d, B = std::min(q.block, q.n);
  const std::uint64_t T = detail::ceil_div(N, B);
  Cost c;
  switch (q.variant) {
    case Variant::linear_blocked:
      c.slow_loads = 4 * N * D;
      c.slow_stores = N * D;
      c.peak_slow_memory = 4 * N * D;
      c.flops = T * (detail::blocked_kv_flops(B, D, q.normalize) + detail::blocked_q_flops(B, D, q.normalize));
      return c;
    case Variant::linear_causal_blocked:
      c.slow_loads = 4 * N * D;
      c.slow_stores = N * D;
      c.peak_slow_memory = 4 * N * D;
      c.flops = T * detail::causal_block_flops(B, D, q.normalize);
      return c;
    case Variant::linear_naive:
      if (q.causal) {
        c.slow_loads = 4 * N * D;
        c.slow_stores = N * D;
        c.peak_slow_memory = 4 * N * D;
        c.flops = N * (D + 4 * D * D + (q.normalize ? 4 * D : 0));
      } else {
        // kv = KᵀV materialized in slow memory, then O = φ(Q)·kv.
        c.slow_loads = 4 * N * D + D * D;
        c.slow_stores = N * D + D * D;
        c.peak_slow_memory = 4 * N * D + D * D;
        c.flops = N * D + D * D * (2 * N - 1) + N * D + N * D * (2 * D - 1);
        if (q.normalize) c.flops += D * (N - 1) + N * (2 * D - 1) + N + N * D;
      }
      return c;
    case Variant::softmax:
      c.slow_loads = 3 * N * D + 2 * N * N;
      c.slow_stores = N * D + 2 * N * N;
      c.peak_slow_memory = 4 * N * D + 2 * N * N;
      c.flops = detail::softmax_flops(N, N, D, q.causal);
      return c;
    case Variant::pfn_softmax: {
      const std::uint64_t n = q.n_train;
      if (n < 1 || n > N) throw ContractError("cost_model: pfn variants need 1 <= n_train <= N");
      c.slow_loads = N * D + 2 * n * D + 2 * N * n;
      c.slow_stores = N * D + 2 * N * n;
      c.peak_slow_memory = 4 * N * D + 2 * N * n;
      c.flops = detail::softmax_flops(N, n, D, q.causal);
      return c;
    }
    case Variant::pfn_linear: {
      const std::uint64_t n = q.n_train;
      if (n < 1 || n > N) throw ContractError("cost_model: pfn variants need 1 <= n_train <= N");
      const std::uint64_t m = N - n;
      const std::uint64_t Bn = std::min(q.block, n);
      c.peak_slow_memory = 4 * N * D;
      if (q.causal) {
        c.slow_loads = 4 * n * D + 2 * m * D;
        c.slow_stores = N * D;
        c.flops = detail::ceil_div(n, Bn) * detail::causal_block_flops(Bn, D, q.normalize);
        if (m > 0) {
          const std::uint64_t Bm = std::min(q.block, m);
          c.flops += detail::ceil_div(m, Bm) * detail::blocked_q_flops(Bm, D, q.normalize);
        }
      } else {
        c.slow_loads = 2 * n * D + 2 * N * D;
        c.slow_stores = N * D;
        c.flops = detail::ceil_div(n, Bn) * detail::blocked_kv_flops(Bn, D, q.normalize) +
                  T * detail::blocked_q_flops(B, D, q.normalize);
      }
      return c;
    }
  }
  throw ContractError("cost_model: unknown variant");
}

inline Cost cost_model(Variant v, std::uint64_t n, std::uint64_t d, std::uint64_t b) {
  return cost_model(CostQuery{.variant = v, .n = n, .d = d, .block = b});
}

namespace detail {

/// Counts element traffic between slow-memory operands and on-chip tiles.
class SlowMemory {
 public:
  void allocate(std::uint64_t elements) {
    resident_ += elements;
    cost_.peak_slow_memory = std::max(cost_.peak_slow_memory, resident_);
  }
  void release(std::uint64_t elements) { resident_ -= elements; }

  /// Copies rows [r0, r0+count) of `src` into the top of `tile`; zero-fills the rest.
  template <typename T>
  void load(View<T> src, std::size_t r0, std::size_t count, BasicMatrix<T>& tile) {
    std::fill(tile.data(), tile.data() + tile.size(), T{0});
    std::copy_n(src.row(r0), count * src.cols, tile.data());
    cost_.slow_loads += count * src.cols;
  }
  template <typename T>
  void load(const BasicMatrix<T>& src, std::size_t r0, std::size_t count, BasicMatrix<T>& tile) {
    load(View<T>(src), r0, count, tile);
  }
  template <typename T>
  void store(const BasicMatrix<T>& tile, std::size_t count, BasicMatrix<T>& dst, std::size_t r0) {
    std::copy_n(tile.data(), count * tile.cols(), dst.data() + r0 * dst.cols());
    cost_.slow_stores += count * tile.cols();
  }

  void flops(std::uint64_t f) { cost_.flops += f; }
  const Cost& cost() const { return cost_; }

 private:
  std::uint64_t resident_ = 0;
  Cost cost_;
};

template <typename T>
void apply_feature_map(BasicMatrix<T>& tile) {
  for (auto& x : tile.values()) x = elu_plus_one(x);
}

// S += Kᵀ V over tile rows in order.
template <typename T>
void accumulate_kv(const BasicMatrix<T>& k, const BasicMatrix<T>& v, BasicMatrix<T>& s) {
  const std::size_t D = k.cols(), Dv = v.cols();
  for (std::size_t r = 0; r < k.rows(); ++r) {
    const T* kr = k.data() + r * D;
    const T* vr = v.data() + r * Dv;
    for (std::size_t a = 0; a < D; ++a) {
      const T w = kr[a];
      T* __restrict sa = s.data() + a * Dv;
      for (std::size_t c = 0; c < Dv; ++c) sa[c] += w * vr[c];
    }
  }
}

// out[r] (+)= q[r] · S
template <typename T>
void query_times_state(const BasicMatrix<T>& q, const BasicMatrix<T>& s, BasicMatrix<T>& out,
                       bool accumulate) {
  const std::size_t D = q.cols(), Dv = s.cols();
  for (std::size_t r = 0; r < q.rows(); ++r) {
    T* __restrict o = out.data() + r * Dv;
    if (!accumulate) std::fill(o, o + Dv, T{0});
    const T* qr = q.data() + r * D;
    for (std::size_t a = 0; a < D; ++a) {
      const T w = qr[a];
      const T* __restrict sa = s.data() + a * Dv;
      for (std::size_t c = 0; c < Dv; ++c) o[c] += w * sa[c];
    }
  }
}

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T s{0};
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

template <typename T>
std::size_t checked_block(const Request<T>& req, std::size_t n, std::vector<std::string>& warnings) {
  if (req.block_size == 0) throw ContractError("attention: block_size must be >= 1");
  if (req.block_size > n) {
    warnings.push_back("block_size " + std::to_string(req.block_size) + " > N=" + std::to_string(n) +
                       "; clamped to " + std::to_string(n));
    return n;
  }
  return req.block_size;
}

template <typename T>
void check_shapes(const Request<T>& req) {
  if (req.q.rows == 0) throw DimensionError("attention: empty sequence");
  if (req.q.rows != req.k.rows || req.q.rows != req.v.rows || req.q.cols != req.k.cols ||
      req.q.cols != req.v.cols) {
    throw DimensionError("attention: q, k, v must share shape; got (" + std::to_string(req.q.rows) + "x" +
                         std::to_string(req.q.cols) + "), (" + std::to_string(req.k.rows) + "x" +
                         std::to_string(req.k.cols) + "), (" + std::to_string(req.v.rows) + "x" +
                         std::to_string(req.v.cols) + ")");
  }
}

// Streams query blocks of rows [begin, end) against a fixed state (S, z).
template <typename T>
void linear_query_pass(const Request<T>& req, std::size_t begin, std::size_t end, std::size_t B,
                       const BasicMatrix<T>& S, const BasicMatrix<T>& z, SlowMemory& mem,
                       BasicMatrix<T>& out) {
  const std::size_t D = req.q.cols;
  BasicMatrix<T> qt(B, D), ot(B, D);
  for (std::size_t r0 = begin; r0 < end; r0 += B) {
    const std::size_t r = std::min(B, end - r0);
    mem.load(req.q, r0, r, qt);
    mem.load(out, r0, r, ot);
    apply_feature_map(qt);
    query_times_state(qt, S, ot, false);
    if (req.normalize) {
      for (std::size_t b = 0; b < B; ++b) {
        const T den = dot(qt.data() + b * D, z.data(), D) + req.eps;
        for (std::size_t c = 0; c < D; ++c) ot(b, c) /= den;
      }
    }
    mem.flops(blocked_q_flops(B, D, req.normalize));
    mem.store(ot, r, out, r0);
  }
}

// Streams key/value blocks of rows [0, n) into (S, z).
template <typename T>
void linear_state_pass(const Request<T>& req, std::size_t n, std::size_t B, BasicMatrix<T>& S,
                       BasicMatrix<T>& z, SlowMemory& mem) {
  const std::size_t D = req.q.cols;
  BasicMatrix<T> kt(B, D), vt(B, D);
  for (std::size_t r0 = 0; r0 < n; r0 += B) {
    const std::size_t r = std::min(B, n - r0);
    mem.load(req.k, r0, r, kt);
    mem.load(req.v, r0, r, vt);
    apply_feature_map(kt);
    if (req.normalize) {
      for (std::size_t b = 0; b < r; ++b)
        for (std::size_t c = 0; c < D; ++c) z[c] += kt(b, c);
    }
    accumulate_kv(kt, vt, S);
    mem.flops(blocked_kv_flops(B, D, req.normalize));
  }
}

// Causal blocks over rows [0, n): O_j = φ(Q_j)S + (φ(Q_j)φ(K_j)ᵀ ⊙ M)V_j, then S += φ(K_j)ᵀV_j.
template <typename T>
void causal_pass(const Request<T>& req, std::size_t n, std::size_t B, BasicMatrix<T>& S,
                 BasicMatrix<T>& z, SlowMemory& mem, BasicMatrix<T>& out) {
  const std::size_t D = req.q.cols;
  BasicMatrix<T> kt(B, D), vt(B, D), qt(B, D), ot(B, D), a(B, B);
  std::vector<T> den(B);
  for (std::size_t r0 = 0; r0 < n; r0 += B) {
    const std::size_t r = std::min(B, n - r0);
    mem.load(req.k, r0, r, kt);
    mem.load(req.v, r0, r, vt);
    mem.load(req.q, r0, r, qt);
    mem.load(out, r0, r, ot);
    apply_feature_map(kt);
    apply_feature_map(qt);
    for (std::size_t i = 0; i < B; ++i)
      for (std::size_t j = 0; j < B; ++j)
        a(i, j) = j <= i ? dot(qt.data() + i * D, kt.data() + j * D, D) : T{0};
    if (req.normalize) {
      for (std::size_t i = 0; i < B; ++i) {
        T s = dot(qt.data() + i * D, z.data(), D);
        for (std::size_t j = 0; j <= i; ++j) s += a(i, j);
        den[i] = s + req.eps;
      }
    }
    query_times_state(qt, S, ot, true);
    for (std::size_t i = 0; i < B; ++i) {
      T* o = ot.data() + i * D;
      for (std::size_t j = 0; j <= i; ++j) {
        const T w = a(i, j);
        const T* vj = vt.data() + j * D;
        for (std::size_t c = 0; c < D; ++c) o[c] += w * vj[c];
      }
    }
    if (req.normalize) {
      for (std::size_t i = 0; i < B; ++i)
        for (std::size_t c = 0; c < D; ++c) ot(i, c) /= den[i];
      for (std::size_t b = 0; b < r; ++b)
        for (std::size_t c = 0; c < D; ++c) z[c] += kt(b, c);
    }
    mem.store(ot, r, out, r0);
    accumulate_kv(kt, vt, S);
    mem.flops(causal_block_flops(B, D, req.normalize));
  }
}

template <typename T>
Result<T> softmax_impl(const Request<T>& req, std::size_t n_keys, bool pfn) {
  const std::size_t N = req.q.rows, D = req.q.cols;
  Result<T> res;
  BasicMatrix<T> scores(N, n_keys);
  const bool masked = req.causal;
  for (std::size_t i = 0; i < N; ++i) {
    // pfn: causal applies to train rows only; test rows see the whole train segment
    const bool row_masked = masked && (!pfn || i < n_keys);
    for (std::size_t j = 0; j < n_keys; ++j) {
      scores(i, j) = row_masked && j > i ? -std::numeric_limits<T>::infinity()
                                         : req.scale * dot(req.q.row(i), req.k.row(j), D);
    }
  }
  BasicMatrix<T> p = softmax_rows(scores);
  res.output = BasicMatrix<T>(N, D);
  for (std::size_t i = 0; i < N; ++i) {
    T* o = res.output.data() + i * D;
    for (std::size_t j = 0; j < n_keys; ++j) {
      const T w = p(i, j);
      if (w == T{0}) continue;
      const T* vj = req.v.row(j);
      for (std::size_t c = 0; c < D; ++c) o[c] += w * vj[c];
    }
  }
  CostQuery cq{.variant = pfn ? Variant::pfn_softmax : Variant::softmax,
               .n = N, .d = D, .block = 1, .n_train = n_keys, .causal = masked};
  res.cost = cost_model(cq);
  return res;
}

}  // namespace detail

/// Quadratic reference: a_i = Σ_j exp(s·q_i·k_j) v_j / Σ_j exp(s·q_i·k_j).
/// Costs are the analytic counts of materializing scores and probabilities
/// in slow memory (no tiling).
template <typename T>
Result<T> softmax_attention(const Request<T>& req) {
  detail::check_shapes(req);
  return detail::softmax_impl(req, req.q.rows, false);
}

/// Two-step linear attention: kv = φ(K)ᵀV materialized, then O = φ(Q)·kv
/// (optionally divided by φ(Q)·Σφ(K) + ε). With `causal` the prefix
/// recurrence is evaluated row by row.
template <typename T>
Result<T> linear_attention_naive(const Request<T>& req) {
  detail::check_shapes(req);
  const std::size_t N = req.q.rows, D = req.q.cols;
  Result<T> res;
  res.output = BasicMatrix<T>(N, D);
  if (req.causal) {
    BasicMatrix<T> S(D, D);
    std::vector<T> z(D, T{0}), fk(D), fq(D);
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t a = 0; a < D; ++a) {
        fk[a] = elu_plus_one(req.k(i, a));
        fq[a] = elu_plus_one(req.q(i, a));
        z[a] += fk[a];
        for (std::size_t c = 0; c < D; ++c) S(a, c) += fk[a] * req.v(i, c);
      }
      T* o = res.output.data() + i * D;
      for (std::size_t a = 0; a < D; ++a)
        for (std::size_t c = 0; c < D; ++c) o[c] += fq[a] * S(a, c);
      if (req.normalize) {
        const T den = detail::dot(fq.data(), z.data(), D) + req.eps;
        for (std::size_t c = 0; c < D; ++c) o[c] /= den;
      }
    }
  } else {
    BasicMatrix<T> fk(N, D), fq(N, D), vv(N, D);
    std::copy_n(req.k.data, N * D, fk.data());
    std::copy_n(req.q.data, N * D, fq.data());
    std::copy_n(req.v.data, N * D, vv.data());
    detail::apply_feature_map(fk);
    detail::apply_feature_map(fq);
    BasicMatrix<T> S(D, D);
    detail::accumulate_kv(fk, vv, S);
    detail::query_times_state(fq, S, res.output, false);
    if (req.normalize) {
      std::vector<T> z(D, T{0});
      for (std::size_t r = 0; r < N; ++r)
        for (std::size_t c = 0; c < D; ++c) z[c] += fk(r, c);
      for (std::size_t r = 0; r < N; ++r) {
        const T den = detail::dot(fq.data() + r * D, z.data(), D) + req.eps;
        for (std::size_t c = 0; c < D; ++c) res.output(r, c) /= den;
      }
    }
  }
  res.cost = cost_model(CostQuery{.variant = Variant::linear_naive, .n = N, .d = D, .block = 1,
                                  .normalize = req.normalize, .causal = req.causal});
  return res;
}

/// Blocked non-causal linear attention: pass 1 accumulates S = Σ φ(K_i)ᵀV_i
/// over key blocks, pass 2 writes O_j = φ(Q_j)·S per query block.
template <typename T>
Result<T> linear_attention_blocked(const Request<T>& req) {
  detail::check_shapes(req);
  const std::size_t N = req.q.rows, D = req.q.cols;
  Result<T> res;
  const std::size_t B = detail::checked_block(req, N, res.warnings);
  detail::SlowMemory mem;
  mem.allocate(3 * N * D);  // Q, K, V
  res.output = BasicMatrix<T>(N, D);
  mem.allocate(N * D);      // O
  BasicMatrix<T> S(D, D), z(1, D);
  detail::linear_state_pass(req, N, B, S, z, mem);
  detail::linear_query_pass(req, 0, N, B, S, z, mem, res.output);
  res.cost = mem.cost();
  return res;
}

/// Blocked causal linear attention. Each loaded output tile starts at zero
/// and receives both the inter-block term φ(Q_j)S and the masked intra-block term.
template <typename T>
Result<T> linear_attention_causal_blocked(const Request<T>& req) {
  detail::check_shapes(req);
  const std::size_t N = req.q.rows, D = req.q.cols;
  Result<T> res;
  const std::size_t B = detail::checked_block(req, N, res.warnings);
  detail::SlowMemory mem;
  mem.allocate(3 * N * D);
  res.output = BasicMatrix<T>(N, D);
  mem.allocate(N * D);
  BasicMatrix<T> S(D, D), z(1, D);
  detail::causal_pass(req, N, B, S, z, mem, res.output);
  res.cost = mem.cost();
  return res;
}

/// Two-segment attention: every position attends to the first n_train rows
/// only. With `causal`, train row i sees train rows j ≤ i while test rows
/// still see the full train segment.
template <typename T>
Result<T> pfn_attention(const Request<T>& req) {
  detail::check_shapes(req);
  const std::size_t N = req.q.rows, D = req.q.cols, n = req.n_train;
  if (n == 0) throw ContractError("pfn_attention: n_train must be >= 1 (no context)");
  if (n > N) throw ContractError("pfn_attention: n_train exceeds sequence length");
  if (req.variant == Variant::pfn_softmax) return detail::softmax_impl(req, n, true);
  if (req.variant != Variant::pfn_linear) throw ContractError("pfn_attention: variant must be pfn_*");

  Result<T> res;
  if (req.block_size == 0) throw ContractError("attention: block_size must be >= 1");
  if (req.block_size > N) {
    res.warnings.push_back("block_size " + std::to_string(req.block_size) + " > N=" + std::to_string(N) +
                           "; clamped to " + std::to_string(N));
  }
  detail::SlowMemory mem;
  mem.allocate(3 * N * D);
  res.output = BasicMatrix<T>(N, D);
  mem.allocate(N * D);
  BasicMatrix<T> S(D, D), z(1, D);
  if (req.causal) {
    detail::causal_pass(req, n, std::min(req.block_size, n), S, z, mem, res.output);
    if (N > n) detail::linear_query_pass(req, n, N, std::min(req.block_size, N - n), S, z, mem, res.output);
  } else {
    detail::linear_state_pass(req, n, std::min(req.block_size, n), S, z, mem);
    detail::linear_query_pass(req, 0, N, std::min(req.block_size, N), S, z, mem, res.output);
  }
  res.cost = mem.cost();
  return res;
}

/// Dispatches on `req.variant`.
template <typename T>
Result<T> run(const Request<T>& req) {
  switch (req.variant) {
    case Variant::softmax: return softmax_attention(req);
    case Variant::linear_naive: return linear_attention_naive(req);
    case Variant::linear_blocked: return linear_attention_blocked(req);
    case Variant::linear_causal_blocked: return linear_attention_causal_blocked(req);
    case Variant::pfn_linear:
    case Variant::pfn_softmax: return pfn_attention(req);
  }
  throw ContractError("attention: unknown variant");
}

/// Runs the single-head kernel on each D/heads column slice; costs are summed.
template <typename T>
Result<T> multi_head(const BasicMatrix<T>& q, const BasicMatrix<T>& k, const BasicMatrix<T>& v,
                     std::size_t heads, Request<T> opts) {
  if (heads == 0 || q.cols() % heads != 0) {
    throw DimensionError("multi_head: width " + std::to_string(q.cols()) + " not divisible by " +
                         std::to_string(heads) + " heads");
  }
  const std::size_t dh = q.cols() / heads;
  Result<T> res;
  std::vector<BasicMatrix<T>> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    BasicMatrix<T> qh = col_slice(q, h * dh, (h + 1) * dh);
    BasicMatrix<T> kh = col_slice(k, h * dh, (h + 1) * dh);
    BasicMatrix<T> vh = col_slice(v, h * dh, (h + 1) * dh);
    opts.q = qh;
    opts.k = kh;
    opts.v = vh;
    Result<T> r = run(opts);
    res.cost += r.cost;
    if (h == 0) res.warnings = r.warnings;
    outs.push_back(std::move(r.output));
  }
  res.output = hstack<T>(outs);
  return res;
}

}  // namespace linpfn::attention
