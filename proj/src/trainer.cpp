// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "linpfn/trainer.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "linpfn/preprocess.hpp"
#include "linpfn/serialization.hpp"

namespace linpfn {

using nlohmann::json;

void TrainConfig::validate() const {
  if (batch_size < 1) throw ContractError("train: batch_size must be >= 1");
  if (total_steps() < 1) throw ContractError("train: steps_per_epoch * epochs must be >= 1");
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) throw ContractError("train: learning_rate must be >= 0");
  if (!(warmup_fraction >= 0 && warmup_fraction <= 1)) throw ContractError("train: warmup_fraction must be in [0, 1]");
  if (!(grad_clip_norm > 0)) throw ContractError("train: grad_clip_norm must be > 0");
  if (threads < 1) throw ContractError("train: threads must be >= 1");
  model.validate();
  prior.validate();
  if (prior.prompt_len > model.max_prompt)
    throw ContractError("train: prior prompt_len " + std::to_string(prior.prompt_len) + " exceeds max_prompt " +
                        std::to_string(model.max_prompt));
  if (prior.max_classes > model.class_capacity)
    throw ContractError("train: prior max_classes exceeds the model's class_capacity");
}

TrainConfig train_preset(std::string_view name) {
  TrainConfig c;
  if (name == "toy-s" || name == "toy-s-mlp") {
    c.model = model_preset("toy-s");
    c.prior.kind = name == "toy-s" ? PriorKind::blobs : PriorKind::mlp;
    c.prior.max_features = 10;
    c.prior.max_classes = 2;
    c.prior.prompt_len = 256;
    c.learning_rate = 3e-4;
    return c;
  }
  c.model = model_preset(name);
  c.prior.max_features = c.model.feature_capacity;
  c.prior.max_classes = c.model.class_capacity;
  c.prior.prompt_len = c.model.max_prompt;
  c.steps_per_epoch = name == "s100" ? 8192 : 1024;
  c.epochs = 4;
  return c;
}

json to_json(const TrainConfig& c) {
  return json{{"batch_size", c.batch_size},
              {"steps_per_epoch", c.steps_per_epoch},
              {"epochs", c.epochs},
              {"learning_rate", c.learning_rate},
              {"warmup_fraction", c.warmup_fraction},
              {"grad_clip_norm", c.grad_clip_norm},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"prior", to_json(c.prior)},
              {"model", to_json(c.model)},
              {"seed", c.seed},
              {"threads", c.threads}};
}

TrainConfig train_config_from_json(const json& j, const std::string& path) {
  using json_detail::field_or;
  if (!j.is_object()) throw FormatError(path, "expected an object");
  TrainConfig c;
  c.batch_size = field_or(j, "batch_size", path, c.batch_size);
  c.steps_per_epoch = field_or(j, "steps_per_epoch", path, c.steps_per_epoch);
  c.epochs = field_or(j, "epochs", path, c.epochs);
  c.learning_rate = field_or(j, "learning_rate", path, c.learning_rate);
  c.warmup_fraction = field_or(j, "warmup_fraction", path, c.warmup_fraction);
  c.grad_clip_norm = field_or(j, "grad_clip_norm", path, c.grad_clip_norm);
  c.adam_beta1 = field_or(j, "adam_beta1", path, c.adam_beta1);
  c.adam_beta2 = field_or(j, "adam_beta2", path, c.adam_beta2);
  c.adam_eps = field_or(j, "adam_eps", path, c.adam_eps);
  if (j.contains("prior")) c.prior = prior_spec_from_json(j["prior"], path + ".prior");
  if (j.contains("model")) c.model = model_config_from_json(j["model"], path + ".model");
  c.seed = field_or(j, "seed", path, c.seed);
  c.threads = field_or(j, "threads", path, c.threads);
  return c;
}

double learning_rate_at(const TrainConfig& c, std::size_t step) {
  const auto warm = static_cast<std::size_t>(std::ceil(c.warmup_fraction * static_cast<double>(c.total_steps())));
  if (warm > 0 && step < warm)
    return c.learning_rate * static_cast<double>(step + 1) / static_cast<double>(warm);
  return c.learning_rate;
}

double cross_entropy_loss(const Matrix& logits, std::span<const std::size_t> labels, std::size_t n_classes) {
  return ag::cross_entropy(ag::Var(logits), labels, n_classes).value()[0];
}

std::uint64_t task_seed(std::uint64_t seed, std::size_t step, std::size_t index) {
  return mix_seed(seed, step, index);
}

TrainingExample make_training_example(const TrainConfig& c, std::uint64_t seed) {
  TabularTask task = sample_task(c.prior, seed);
  if (task.n_classes > c.model.class_capacity)
    throw CapacityError("prior task has more classes than the model's class_capacity");
  const PreprocessState state = fit_preprocess(task, c.model.feature_capacity, mix_seed(seed, 0x70726f6aULL));
  TrainingExample ex;
  ex.prompt.x = apply_preprocess(state, task.x);
  ex.prompt.y_train.assign(task.labels.begin(), task.labels.begin() + static_cast<std::ptrdiff_t>(task.n_train));
  ex.y_test.assign(task.labels.begin() + static_cast<std::ptrdiff_t>(task.n_train), task.labels.end());
  ex.n_classes = task.n_classes;
  return ex;
}

namespace {

struct TaskGradient {
  double loss = 0;
  std::uint64_t seed = 0;
  ag::Gradients grads;
};

TaskGradient task_gradient(const TrainConfig& c, const TensorMap& params, std::uint64_t seed) {
  TrainingExample ex = make_training_example(c, seed);
  ag::Tape tape;
  ParamVars vars;
  for (const auto& [name, m] : params) vars.emplace(name, tape.leaf(m, name));
  ag::Var logits = forward(c.model, vars, ex.prompt);
  ag::Var loss = ag::cross_entropy(logits, ex.y_test, ex.n_classes);
  TaskGradient out;
  out.loss = loss.value()[0];
  out.seed = seed;
  if (std::isfinite(out.loss)) out.grads = tape.backward(loss);
  return out;
}

void run_parallel(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

TrainResult train(const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  const auto specs = parameter_specs(config.model);
  TensorMap params, m1, m2;
  std::size_t start = 0;
  std::vector<double> loss_curve;
  if (options.resume) {
    const Checkpoint& r = *options.resume;
    if (!(r.config == config.model)) throw ContractError("resume: checkpoint config differs from the train config");
    params = r.tensors;
    for (const auto& s : specs) {
      auto im = r.optimizer.find("adam.m." + s.name), iv = r.optimizer.find("adam.v." + s.name);
      if (im == r.optimizer.end() || iv == r.optimizer.end())
        throw StateError("resume: checkpoint has no optimizer state for '" + s.name + "'");
      m1.emplace(s.name, im->second);
      m2.emplace(s.name, iv->second);
    }
    start = r.provenance.steps;
    loss_curve = r.provenance.loss_curve;
  } else {
    params = init_parameters(config.model, mix_seed(config.seed, 0x696e6974ULL));
    for (const auto& s : specs) {
      m1.emplace(s.name, Matrix(s.rows, s.cols));
      m2.emplace(s.name, Matrix(s.rows, s.cols));
    }
  }
  const std::size_t end = options.stop_at ? std::min(options.stop_at, config.total_steps()) : config.total_steps();

  TrainResult result;
  for (std::size_t step = start; step < end; ++step) {
    std::vector<TaskGradient> tasks(config.batch_size);
    run_parallel(config.batch_size, config.threads, [&](std::size_t b) {
      tasks[b] = task_gradient(config, params, task_seed(config.seed, step, b));
    });
    double loss = 0;
    for (const auto& t : tasks) {
      if (!std::isfinite(t.loss))
        throw TrainingError("non-finite loss at step " + std::to_string(step) + " (task seed " +
                            std::to_string(t.seed) + ")");
      loss += t.loss;
    }
    loss /= static_cast<double>(config.batch_size);

    TensorMap grad;
    double sq = 0;
    for (const auto& s : specs) {
      Matrix g(s.rows, s.cols);
      for (const auto& t : tasks) {
        const Matrix& gt = t.grads.at(s.name);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += gt[i];
      }
      for (auto& v : g.values()) {
        v /= static_cast<double>(config.batch_size);
        sq += v * v;
      }
      grad.emplace(s.name, std::move(g));
    }
    const double norm = std::sqrt(sq);
    double post_sq = sq;
    if (norm > config.grad_clip_norm) {
      const double scale = config.grad_clip_norm / norm;
      post_sq = 0;
      for (auto& [name, g] : grad)
        for (auto& v : g.values()) {
          v *= scale;
          post_sq += v * v;
        }
    }

    const double lr = learning_rate_at(config, step);
    const double t = static_cast<double>(step + 1);
    const double bc1 = 1.0 - std::pow(config.adam_beta1, t), bc2 = 1.0 - std::pow(config.adam_beta2, t);
    for (const auto& s : specs) {
      Matrix& p = params.at(s.name);
      Matrix& m = m1.at(s.name);
      Matrix& v = m2.at(s.name);
      const Matrix& g = grad.at(s.name);
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = config.adam_beta1 * m[i] + (1 - config.adam_beta1) * g[i];
        v[i] = config.adam_beta2 * v[i] + (1 - config.adam_beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config.adam_eps);
      }
      // parameters and moments live at checkpoint precision so a resumed run matches
      round_to_f32(p);
      round_to_f32(m);
      round_to_f32(v);
    }

    StepRecord rec{step, loss, std::sqrt(post_sq), lr};
    result.curve.push_back(rec);
    loss_curve.push_back(loss);
    if (options.on_step) options.on_step(rec);
  }

  Checkpoint& ck = result.checkpoint;
  ck.config = config.model;
  ck.tensors = std::move(params);
  for (const auto& s : specs) {
    ck.optimizer.emplace("adam.m." + s.name, std::move(m1.at(s.name)));
    ck.optimizer.emplace("adam.v." + s.name, std::move(m2.at(s.name)));
  }
  ck.provenance.prior_seed = config.seed;
  ck.provenance.steps = std::max(end, start);
  ck.provenance.loss_curve = std::move(loss_curve);
  ck.provenance.info = to_json(config);
  ck.provenance.info.erase("threads");  // results do not depend on it
  return result;
}

std::string loss_curve_csv(std::span<const StepRecord> curve) {
  std::ostringstream os;
  os.precision(17);
  os << "step,loss,grad_norm,lr\n";
  for (const auto& r : curve) os << r.step << ',' << r.loss << ',' << r.grad_norm << ',' << r.lr << '\n';
  return os.str();
}

}  // namespace linpfn
