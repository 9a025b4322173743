// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "linpfn/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <numeric>
#include <random>
#include <sstream>

#include "linpfn/metrics.hpp"
#include "linpfn/serialization.hpp"

namespace linpfn {

using nlohmann::json;

json ExperimentRecord::to_json() const {
  return json{{"experiment", id}, {"config", config},   {"rows", rows},
              {"environment", environment}, {"summary", summary}, {"timestamp", timestamp}};
}

ExperimentRecord ExperimentRecord::from_json(const json& j) {
  using json_detail::field;
  ExperimentRecord r;
  r.id = field<std::string>(j, "experiment", "record");
  r.config = j.value("config", json::object());
  if (!j.contains("rows") || !j["rows"].is_array()) throw FormatError("record.rows", "expected an array");
  for (const auto& row : j["rows"]) r.rows.push_back(row);
  r.environment = j.value("environment", json::object());
  r.summary = j.value("summary", json::object());
  r.timestamp = j.value("timestamp", std::string());
  return r;
}

std::vector<std::string> ExperimentRecord::columns() const {
  std::vector<std::string> cols;
  for (const auto& row : rows)
    for (const auto& [k, v] : row.items())
      if (std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
  return cols;
}

namespace {

std::string csv_cell(const json& v) {
  std::string s;
  if (v.is_string()) {
    s = v.get<std::string>();
  } else if (v.is_number_float()) {
    std::ostringstream os;
    os.precision(17);
    os << v.get<double>();
    s = os.str();
  } else if (!v.is_null()) {
    s = v.dump();
  }
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace

std::string ExperimentRecord::to_csv() const {
  const auto cols = columns();
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + csv_cell(cols[i]);
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) out += ',';
      if (row.contains(cols[i])) out += csv_cell(row[cols[i]]);
    }
    out += '\n';
  }
  return out;
}

std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json environment_note(std::size_t threads, Precision precision) {
  return json{{"threads", threads},
              {"precision", std::string(to_string(precision))},
              {"timing", "monotonic clock around forward passes only; median of repeats"}};
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractError("fit_line: need at least two paired points");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0)) throw ContractError("fit_line: x has no spread");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

template <typename T>
json bench_row(const BenchAttentionConfig& cfg, attention::Variant variant, std::size_t n, std::size_t b) {
  std::mt19937_64 rng(mix_seed(cfg.seed, n, b));
  std::normal_distribution<double> nd(0.0, 1.0);
  auto random = [&] {
    BasicMatrix<T> m(n, cfg.d);
    for (auto& x : m.values()) x = static_cast<T>(nd(rng));
    return m;
  };
  const BasicMatrix<T> q = random(), k = random(), v = random();
  attention::Request<T> req;
  req.q = q;
  req.k = k;
  req.v = v;
  req.variant = variant;
  req.block_size = b;
  req.normalize = cfg.normalize;
  const bool pfn = variant == attention::Variant::pfn_linear || variant == attention::Variant::pfn_softmax;
  if (pfn) req.n_train = std::max<std::size_t>(1, static_cast<std::size_t>(cfg.train_fraction * static_cast<double>(n)));
  std::vector<double> times;
  attention::Result<T> res;
  for (std::size_t r = 0; r < std::max<std::size_t>(1, cfg.repeats); ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    res = attention::run(req);
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  attention::CostQuery cq;
  cq.variant = variant;
  cq.n = n;
  cq.d = cfg.d;
  cq.block = b;
  cq.n_train = req.n_train;
  cq.normalize = cfg.normalize;
  const attention::Cost model = attention::cost_model(cq);
  std::string warning;
  for (const auto& w : res.warnings) warning += (warning.empty() ? "" : "; ") + w;
  return json{{"variant", std::string(attention::to_string(variant))},
              {"n", n},
              {"d", cfg.d},
              {"block", b},
              {"n_train", req.n_train},
              {"seconds", median(times)},
              {"slow_loads", res.cost.slow_loads},
              {"slow_stores", res.cost.slow_stores},
              {"accesses", res.cost.accesses()},
              {"peak_slow_memory", res.cost.peak_slow_memory},
              {"flops", res.cost.flops},
              {"model_accesses", model.accesses()},
              {"model_peak_slow_memory", model.peak_slow_memory},
              {"model_flops", model.flops},
              {"counters_match", res.cost == model},
              {"warning", warning}};
}

}  // namespace

json to_json(const BenchAttentionConfig& c) {
  json vs = json::array();
  for (auto v : c.variants) vs.push_back(std::string(attention::to_string(v)));
  return json{{"ns", c.ns},       {"d", c.d},         {"blocks", c.blocks},
              {"variants", vs},   {"normalize", c.normalize}, {"train_fraction", c.train_fraction},
              {"repeats", c.repeats}, {"seed", c.seed}, {"precision", std::string(to_string(c.precision))}};
}

ExperimentRecord bench_attention(const BenchAttentionConfig& cfg) {
  if (cfg.d < 1) throw ContractError("bench-attention: d must be >= 1");
  ExperimentRecord rec;
  rec.id = "bench-attention";
  rec.config = to_json(cfg);
  rec.environment = environment_note(1, cfg.precision);
  rec.timestamp = utc_timestamp();
  bool all_match = true;
  for (auto variant : cfg.variants)
    for (std::size_t n : cfg.ns)
      for (std::size_t b : cfg.blocks) {
        if (n < 1 || b < 1) throw ContractError("bench-attention: N and B must be >= 1");
        json row = cfg.precision == Precision::f32 ? bench_row<float>(cfg, variant, n, b)
                                                   : bench_row<double>(cfg, variant, n, b);
        all_match = all_match && row["counters_match"].get<bool>();
        rec.rows.push_back(std::move(row));
      }
  rec.summary = json{{"all_counters_match", all_match}};
  return rec;
}

json to_json(const CausalAblationConfig& c) {
  return json{{"contexts", c.contexts}, {"tasks", c.tasks},  {"test_rows", c.test_rows},
              {"prior", to_json(c.prior)}, {"seed", c.seed}, {"precision", std::string(to_string(c.precision))}};
}

ExperimentRecord ablate_causal(const Checkpoint& non_causal, const Checkpoint& causal,
                               const CausalAblationConfig& cfg) {
  if (non_causal.config.causal_ablation) throw ContractError("ablate causal: the non-causal checkpoint is causal");
  if (!causal.config.causal_ablation) throw ContractError("ablate causal: the causal checkpoint is not causal");
  if (cfg.contexts.empty() || cfg.tasks == 0 || cfg.test_rows == 0)
    throw ContractError("ablate causal: contexts, tasks and test_rows must be non-empty");
  const std::size_t max_ctx = *std::max_element(cfg.contexts.begin(), cfg.contexts.end());
  PriorSpec ps = cfg.prior;
  ps.prompt_len = max_ctx + cfg.test_rows;
  ps.n_train = max_ctx;

  const Checkpoint* models[2] = {&non_causal, &causal};
  const char* names[2] = {"non_causal", "causal"};
  std::vector<std::vector<double>> acc(2, std::vector<double>(cfg.contexts.size()));
  std::vector<std::vector<double>> auc(acc), auc_count(acc);
  InferenceOptions io;
  io.precision = cfg.precision;
  for (std::size_t t = 0; t < cfg.tasks; ++t) {
    const TabularTask full = sample_task(ps, mix_seed(cfg.seed, 0x636175ULL, t));
    for (std::size_t c = 0; c < cfg.contexts.size(); ++c) {
      std::vector<std::size_t> prefix(cfg.contexts[c]);
      std::iota(prefix.begin(), prefix.end(), 0);
      const TabularTask task = select_train_rows(full, prefix);
      for (int m = 0; m < 2; ++m) {
        io.projection_seed = mix_seed(cfg.seed, t, 1);
        const ClassifyResult r = classify_with(task, *models[m], io);
        acc[m][c] += r.accuracy / static_cast<double>(cfg.tasks);
        if (std::isfinite(r.auc)) {
          auc[m][c] += r.auc;
          auc_count[m][c] += 1;
        }
      }
    }
  }
  ExperimentRecord rec;
  rec.id = "ablate-causal";
  rec.config = to_json(cfg);
  rec.config["non_causal_model"] = to_json(non_causal.config);
  rec.config["causal_model"] = to_json(causal.config);
  rec.environment = environment_note(1, cfg.precision);
  rec.timestamp = utc_timestamp();
  for (int m = 0; m < 2; ++m)
    for (std::size_t c = 0; c < cfg.contexts.size(); ++c)
      rec.rows.push_back(json{{"curve", names[m]},
                              {"context", cfg.contexts[c]},
                              {"accuracy", acc[m][c]},
                              {"auc", auc_count[m][c] > 0 ? json(auc[m][c] / auc_count[m][c]) : json()}});
  json s = json::object();
  for (int m = 0; m < 2; ++m) {
    json curve = json::object();
    for (std::size_t c = 0; c < cfg.contexts.size(); ++c) curve[std::to_string(cfg.contexts[c])] = acc[m][c];
    s[names[m]] = curve;
  }
  rec.summary = s;
  return rec;
}

namespace {

json inference_json(const InferenceOptions& o) {
  return json{{"precision", std::string(to_string(o.precision))},
              {"projection_seed", o.projection_seed},
              {"timing_repeats", o.timing_repeats}};
}

json metric_row(const ClassifyResult& r) {
  return json{{"accuracy", r.accuracy}, {"auc", r.auc}, {"seconds", r.seconds}};
}

std::size_t fraction_count(double f, std::size_t total) {
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(f * static_cast<double>(total))), 1, total);
}

void check_fractions(const std::vector<double>& fr, const char* who) {
  if (fr.empty()) throw ContractError(std::string(who) + ": no fractions");
  for (double f : fr)
    if (!(f > 0 && f <= 1)) throw ContractError(std::string(who) + ": fractions must lie in (0, 1]");
}

}  // namespace

json to_json(const DimsAblationConfig& c) {
  json rs = json::array();
  for (auto r : c.reducers) rs.push_back(std::string(to_string(r)));
  return json{{"fractions", c.fractions}, {"reducers", rs}, {"splits", c.splits}, {"test_fraction", c.test_fraction},
              {"seed", c.seed}, {"inference", inference_json(c.inference)}};
}

ExperimentRecord ablate_dims(const TabularTask& data, const Checkpoint& ckpt, const DimsAblationConfig& cfg) {
  check_fractions(cfg.fractions, "ablate dims");
  ExperimentRecord rec;
  rec.id = "ablate-dims";
  rec.config = to_json(cfg);
  rec.config["model"] = to_json(ckpt.config);
  rec.config["n"] = data.rows();
  rec.config["d"] = data.features();
  rec.environment = environment_note(1, cfg.inference.precision);
  rec.timestamp = utc_timestamp();
  const std::size_t d = data.features();
  for (std::size_t s = 0; s < cfg.splits; ++s) {
    const TabularTask split = random_split(data, cfg.test_fraction, mix_seed(cfg.seed, 0x73706c74ULL, s));
    json base = metric_row(classify_with(split, ckpt, cfg.inference));
    base.update(json{{"reducer", "none"}, {"fraction", 1.0}, {"dim", d}, {"split", s}});
    rec.rows.push_back(base);
    for (ReducerMethod m : cfg.reducers)
      for (double f : cfg.fractions) {
        const std::size_t k = fraction_count(f, d);
        const TabularTask reduced = reduce_task(split, ReducerSpec{m, k, mix_seed(cfg.seed, s, k)});
        json row = metric_row(classify_with(reduced, ckpt, cfg.inference));
        row.update(json{{"reducer", std::string(to_string(m))}, {"fraction", f}, {"dim", k}, {"split", s}});
        rec.rows.push_back(row);
      }
  }
  return rec;
}

json to_json(const SamplingAblationConfig& c) {
  json ss = json::array();
  for (auto m : c.samplers) ss.push_back(std::string(to_string(m)));
  return json{{"fractions", c.fractions}, {"samplers", ss},        {"splits", c.splits},
              {"test_fraction", c.test_fraction}, {"neighbor_k", c.neighbor_k}, {"seed", c.seed},
              {"inference", inference_json(c.inference)}};
}

ExperimentRecord ablate_sampling(const TabularTask& data, const Checkpoint& ckpt, const SamplingAblationConfig& cfg) {
  check_fractions(cfg.fractions, "ablate sampling");
  ExperimentRecord rec;
  rec.id = "ablate-sampling";
  rec.config = to_json(cfg);
  rec.config["model"] = to_json(ckpt.config);
  rec.config["n"] = data.rows();
  rec.config["d"] = data.features();
  rec.environment = environment_note(1, cfg.inference.precision);
  rec.timestamp = utc_timestamp();
  for (std::size_t s = 0; s < cfg.splits; ++s) {
    const TabularTask split = random_split(data, cfg.test_fraction, mix_seed(cfg.seed, 0x73706c74ULL, s));
    json base = metric_row(classify_with(split, ckpt, cfg.inference));
    base.update(json{{"sampler", "none"}, {"fraction", 1.0}, {"count", split.n_train}, {"split", s}});
    rec.rows.push_back(base);
    for (SamplerMethod m : cfg.samplers)
      for (double f : cfg.fractions) {
        const std::size_t k = fraction_count(f, split.n_train);
        const TabularTask sub = subsample_task(split, SamplerSpec{m, k, mix_seed(cfg.seed, s, k), cfg.neighbor_k});
        json row = metric_row(classify_with(sub, ckpt, cfg.inference));
        row.update(json{{"sampler", std::string(to_string(m))}, {"fraction", f}, {"count", k}, {"split", s}});
        rec.rows.push_back(row);
      }
  }
  return rec;
}

json to_json(const ScalingAblationConfig& c) {
  return json{{"ns", c.ns},           {"d", c.d},       {"test_fraction", c.test_fraction},
              {"repeats", c.repeats}, {"seed", c.seed}, {"precision", std::string(to_string(c.precision))}};
}

ExperimentRecord ablate_scaling(const Checkpoint& ckpt, const ScalingAblationConfig& cfg) {
  if (cfg.ns.size() < 2) throw ContractError("ablate scaling: need at least two sample sizes");
  ExperimentRecord rec;
  rec.id = "ablate-scaling";
  rec.config = to_json(cfg);
  rec.config["model"] = to_json(ckpt.config);
  rec.environment = environment_note(1, cfg.precision);
  rec.timestamp = utc_timestamp();
  std::vector<double> ns, ns2, secs;
  InferenceOptions io;
  io.precision = cfg.precision;
  io.timing_repeats = cfg.repeats;
  io.projection_seed = cfg.seed;
  for (std::size_t n : cfg.ns) {
    const auto n_test = static_cast<std::size_t>(std::llround(cfg.test_fraction * static_cast<double>(n)));
    const TabularTask task = sample_blobs(n, cfg.d, 2, 6.0, mix_seed(cfg.seed, n, 0), n - n_test);
    const ClassifyResult r = classify_with(task, ckpt, io);
    json row = metric_row(r);
    row.update(json{{"n", n}, {"d", cfg.d}, {"accesses", r.attention_cost.accesses()},
                    {"flops", r.attention_cost.flops}});
    rec.rows.push_back(row);
    ns.push_back(static_cast<double>(n));
    ns2.push_back(static_cast<double>(n) * static_cast<double>(n));
    secs.push_back(r.seconds);
  }
  const LinearFit lin = fit_line(ns, secs), quad = fit_line(ns2, secs);
  rec.summary = json{{"linear_r2", lin.r2},
                     {"linear_slope", lin.slope},
                     {"linear_intercept", lin.intercept},
                     {"quadratic_r2", quad.r2},
                     {"linear_beats_quadratic", lin.r2 > quad.r2}};
  return rec;
}

json to_json(const EvalConfig& c) {
  return json{{"dataset", c.dataset}, {"splits", c.splits}, {"test_fraction", c.test_fraction},
              {"regression", c.regression}, {"bins", c.bins}, {"seed", c.seed},
              {"inference", inference_json(c.inference)}};
}

ExperimentRecord evaluate(const TabularTask& data, const Router& router, const EvalConfig& cfg) {
  if (cfg.splits < 1) throw UsageError("--splits must be >= 1");
  const auto n_test = static_cast<std::size_t>(std::llround(cfg.test_fraction * static_cast<double>(data.rows())));
  if (n_test == 0) throw UsageError("--test-fraction leaves the test split empty");
  if (n_test >= data.rows()) throw UsageError("--test-fraction leaves the train split empty");
  ExperimentRecord rec;
  rec.id = "eval";
  rec.config = to_json(cfg);
  rec.config["router"] = json{{"n_threshold", router.config().n_threshold},
                              {"d_threshold", router.config().d_threshold},
                              {"ratio_threshold", router.config().ratio_threshold},
                              {"h1k_feature_cap", router.config().h1k_feature_cap},
                              {"forced", router.forced() ? json(std::string(to_string(*router.forced()))) : json()}};
  rec.environment = environment_note(1, cfg.inference.precision);
  rec.timestamp = utc_timestamp();
  const ModelChoice algo = router.algorithm_choice(data.rows(), data.features());
  const ModelChoice choice = router.choose(data.rows(), data.features());
  std::string note = "algorithm choice";
  if (router.forced() && choice != algo)
    note = "forced override " + std::string(to_string(choice)) + " (algorithm choice " + std::string(to_string(algo)) + ")";
  else if (router.forced())
    note = "forced " + std::string(to_string(choice)) + " (matches algorithm choice)";
  std::vector<double> metric, secs;
  for (std::size_t s = 0; s < cfg.splits; ++s) {
    const TabularTask split = random_split(data, cfg.test_fraction, mix_seed(cfg.seed, 0x73706c74ULL, s));
    json row{{"dataset", cfg.dataset}, {"split", s},
             {"model_choice", std::string(to_string(choice))},
             {"algorithm_choice", std::string(to_string(algo))},
             {"routing", note},
             {"n", data.rows()}, {"d", data.features()}};
    if (cfg.regression) {
      InferenceOptions io = cfg.inference;
      double seconds = 0;
      const RegressionResult r = regress_via_bins(split, cfg.bins, [&](const TabularTask& binned) {
        ClassifyResult c = classify(binned, router, io);
        seconds = c.seconds;
        return c.proba;
      });
      row.update(json{{"n_classes", r.bins}, {"r2", r.r2}, {"seconds", seconds}});
      metric.push_back(r.r2);
      secs.push_back(seconds);
    } else {
      const ClassifyResult r = classify(split, router, cfg.inference);
      row.update(json{{"n_classes", data.n_classes}, {"accuracy", r.accuracy}, {"auc", r.auc}, {"seconds", r.seconds}});
      metric.push_back(r.accuracy);
      secs.push_back(r.seconds);
    }
    rec.rows.push_back(std::move(row));
  }
  rec.summary = json{{cfg.regression ? "mean_r2" : "mean_accuracy", mean(metric)}, {"mean_seconds", mean(secs)},
                     {"model_choice", std::string(to_string(choice))}, {"routing", note}};
  return rec;
}

}  // namespace linpfn
