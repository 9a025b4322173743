// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

// linpfn command-line harness: train, eval, bench-attention, ablate, gen-data.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "linpfn/dataset.hpp"
#include "linpfn/experiments.hpp"
#include "linpfn/serialization.hpp"
#include "linpfn/trainer.hpp"

using namespace linpfn;
using nlohmann::json;

namespace {

struct Shared {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string precision = "f64";
  std::string out;
};

void add_shared(CLI::App* cmd, Shared& s) {
  cmd->add_option("--seed", s.seed, "Random seed")->capture_default_str();
  cmd->add_option("--threads", s.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--precision", s.precision, "Inference attention precision")
      ->capture_default_str()
      ->check(CLI::IsMember({"f32", "f64"}));
  cmd->add_option("--out", s.out, "Output path");
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw Error("write to '" + path + "' failed");
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// JSON unless the path ends in .csv; stdout gets JSON.
void emit(const ExperimentRecord& rec, const std::string& out) {
  if (ends_with(out, ".csv")) {
    write_text(out, rec.to_csv());
    write_text(out.substr(0, out.size() - 4) + ".json", rec.to_json().dump(2) + "\n");
  } else {
    write_text(out, rec.to_json().dump(2) + "\n");
  }
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  Shared shared;
  std::string preset = "toy-s";
  std::string config_file;
  std::optional<std::size_t> steps, epochs, batch;
  std::optional<double> lr, warmup, clip;
  std::string prior, variant, resume, loss_csv;
  bool causal = false;
};

TrainConfig resolve_train(const TrainArgs& a, const CLI::App& cmd) {
  if (cmd.count("--config") && cmd.count("--preset"))
    throw UsageError("--config and --preset are mutually exclusive");
  TrainConfig c;
  if (!a.config_file.empty()) {
    std::ifstream f(a.config_file);
    if (!f) throw UsageError("--config: cannot open '" + a.config_file + "'");
    json j;
    try {
      j = json::parse(f);
    } catch (const json::exception& e) {
      throw UsageError(std::string("--config: ") + e.what());
    }
    c = train_config_from_json(j);
  } else {
    try {
      c = train_preset(a.preset);
    } catch (const ContractError& e) {
      throw UsageError(std::string("--preset: ") + e.what());
    }
  }
  if (a.steps) {
    c.steps_per_epoch = *a.steps;
    if (!a.epochs) c.epochs = 1;
  }
  if (a.epochs) c.epochs = *a.epochs;
  if (a.batch) c.batch_size = *a.batch;
  if (a.lr) c.learning_rate = *a.lr;
  if (a.warmup) c.warmup_fraction = *a.warmup;
  if (a.clip) c.grad_clip_norm = *a.clip;
  if (!a.prior.empty()) c.prior.kind = parse_prior_kind(a.prior);
  if (!a.variant.empty()) c.model.attention_variant = attention::parse_variant(a.variant);
  if (a.causal) c.model.causal_ablation = true;
  if (cmd.count("--seed")) c.seed = a.shared.seed;
  c.threads = a.shared.threads;
  if (c.steps_per_epoch == 0) throw UsageError("--steps must be >= 1");
  if (c.epochs == 0) throw UsageError("--epochs must be >= 1");
  if (c.batch_size == 0) throw UsageError("--batch must be >= 1");
  if (c.learning_rate < 0) throw UsageError("--lr must be >= 0");
  if (!(c.warmup_fraction >= 0 && c.warmup_fraction <= 1)) throw UsageError("--warmup must lie in [0, 1]");
  if (!(c.grad_clip_norm > 0)) throw UsageError("--clip must be > 0");
  try {
    c.validate();
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }
  return c;
}

int run_train(const TrainArgs& a, const CLI::App& cmd) {
  if (a.shared.out.empty()) throw UsageError("train: --out <checkpoint path> is required");
  const TrainConfig c = resolve_train(a, cmd);
  TrainOptions opts;
  if (!a.resume.empty()) opts.resume = load_checkpoint(a.resume);
  json echo = to_json(c);
  echo["resume"] = a.resume;
  std::cout << echo.dump(2) << std::endl;
  opts.on_step = [&](const StepRecord& r) {
    if ((r.step + 1) % 100 == 0 || r.step + 1 == c.total_steps())
      std::fprintf(stderr, "step %zu/%zu loss %.4f grad_norm %.3f lr %.2e\n", r.step + 1, c.total_steps(), r.loss,
                   r.grad_norm, r.lr);
  };
  const TrainResult res = train(c, opts);
  save_checkpoint(res.checkpoint, a.shared.out);
  write_text(a.loss_csv.empty() ? a.shared.out + ".loss.csv" : a.loss_csv, loss_curve_csv(res.curve));
  return 0;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  Shared shared;
  std::string dataset, label, checkpoint, s100, l100, h1k, router = "auto";
  std::vector<std::string> categorical;
  std::size_t splits = 10, bins = 10, repeats = 3;
  double test_fraction = 0.5;
  bool regression = false;
};

int run_eval(const EvalArgs& a, const CLI::App& cmd) {
  if (cmd.count("--bins") && !a.regression) throw UsageError("--bins requires --regression");
  if (a.checkpoint.empty() && (a.s100.empty() || a.l100.empty() || a.h1k.empty()))
    throw UsageError("eval: give --checkpoint or all of --s100, --l100, --h1k");
  CsvLoadOptions lo{a.label, a.categorical, a.regression};
  const TabularTask data = load_csv_task(a.dataset, lo);
  if (!a.regression && data.n_classes < 2) throw UsageError("eval: label column has fewer than two classes");

  RouterConfig rc;
  rc.s100_path = a.s100;
  rc.l100_path = a.l100;
  rc.h1k_path = a.h1k;
  Router router = Router::from_files(rc, a.checkpoint);
  if (a.router != "auto") router.force(parse_model_choice(a.router));

  EvalConfig ec;
  ec.dataset = a.dataset;
  ec.splits = a.splits;
  ec.test_fraction = a.test_fraction;
  ec.regression = a.regression;
  ec.bins = a.bins;
  ec.seed = a.shared.seed;
  ec.inference.precision = parse_precision(a.shared.precision);
  ec.inference.projection_seed = a.shared.seed;
  ec.inference.timing_repeats = a.repeats;
  ExperimentRecord rec = evaluate(data, router, ec);
  rec.environment = environment_note(a.shared.threads, ec.inference.precision);
  emit(rec, a.shared.out);
  return 0;
}

// ---- bench-attention -------------------------------------------------------

struct BenchArgs {
  Shared shared;
  std::vector<std::size_t> ns{256, 512, 1024, 2048, 4096};
  std::vector<std::size_t> blocks{64};
  std::vector<std::string> variants{"softmax", "linear_blocked", "linear_causal_blocked"};
  std::size_t d = 64, repeats = 3;
  bool normalize = false;
};

int run_bench(const BenchArgs& a) {
  BenchAttentionConfig c;
  c.ns = a.ns;
  c.blocks = a.blocks;
  c.d = a.d;
  c.repeats = a.repeats;
  c.normalize = a.normalize;
  c.seed = a.shared.seed;
  c.precision = parse_precision(a.shared.precision);
  c.variants.clear();
  for (const auto& v : a.variants) c.variants.push_back(attention::parse_variant(v));
  ExperimentRecord rec = bench_attention(c);
  rec.environment = environment_note(a.shared.threads, c.precision);
  if (a.shared.out.empty()) write_text("", rec.to_csv());
  else emit(rec, a.shared.out);
  return 0;
}

// ---- ablate ----------------------------------------------------------------

struct AblateArgs {
  Shared shared;
  std::string mode, checkpoint, non_causal, causal, data, label;
  std::vector<std::size_t> contexts{8, 16, 32, 64, 128, 256, 512};
  std::vector<std::size_t> ns{1000, 2000, 3000, 4000, 5000, 6000, 7000, 8000, 9000, 10000, 11000, 12000};
  std::vector<double> fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<std::string> methods;
  std::size_t tasks = 20, test_rows = 1000, splits = 3, d = 50, repeats = 3, rows = 400, features = 10;
};

Checkpoint require_checkpoint(const std::string& path, const std::string& flag, const std::string& hint) {
  if (path.empty()) throw UsageError("ablate: missing " + flag + " checkpoint; train it first with `" + hint + "`");
  return load_checkpoint(path);
}

// Prior used to train `ck`, if its provenance records one.
PriorSpec training_prior(const Checkpoint& ck) {
  if (ck.provenance.info.contains("prior")) return prior_spec_from_json(ck.provenance.info["prior"], "provenance.prior");
  PriorSpec p;
  p.max_features = ck.config.feature_capacity;
  return p;
}

TabularTask ablation_data(const AblateArgs& a, const Checkpoint& ck) {
  if (!a.data.empty()) {
    if (a.label.empty()) throw UsageError("ablate: --data requires --label");
    return load_csv_task(a.data, CsvLoadOptions{a.label, {}, false});
  }
  PriorSpec p = training_prior(ck);
  p.kind = PriorKind::mlp;
  p.min_features = p.max_features = a.features;
  p.prompt_len = a.rows;
  p.n_train = a.rows / 2;
  TabularTask t = sample_task(p, mix_seed(a.shared.seed, 0x64617461ULL, 0));
  t.n_train = t.rows();  // splits are drawn by the ablation
  return t;
}

int run_ablate(const AblateArgs& a) {
  const Precision prec = parse_precision(a.shared.precision);
  ExperimentRecord rec;
  if (a.mode == "causal") {
    const Checkpoint nc = require_checkpoint(a.non_causal, "--non-causal", "linpfn train --preset toy-s-mlp --out nc.ckpt");
    const Checkpoint ca =
        require_checkpoint(a.causal, "--causal", "linpfn train --preset toy-s-mlp --causal --out causal.ckpt");
    CausalAblationConfig c;
    c.contexts = a.contexts;
    c.tasks = a.tasks;
    c.test_rows = a.test_rows;
    c.prior = training_prior(nc);
    c.seed = a.shared.seed;
    c.precision = prec;
    rec = ablate_causal(nc, ca, c);
  } else if (a.mode == "scaling") {
    const Checkpoint ck = require_checkpoint(a.checkpoint, "--checkpoint", "linpfn train --preset toy-s --out toy.ckpt");
    ScalingAblationConfig c;
    c.ns = a.ns;
    c.d = a.d;
    c.repeats = a.repeats;
    c.seed = a.shared.seed;
    c.precision = prec;
    rec = ablate_scaling(ck, c);
  } else if (a.mode == "dims" || a.mode == "sampling") {
    const Checkpoint ck = require_checkpoint(a.checkpoint, "--checkpoint", "linpfn train --preset toy-s --out toy.ckpt");
    const TabularTask data = ablation_data(a, ck);
    InferenceOptions io;
    io.precision = prec;
    io.projection_seed = a.shared.seed;
    io.timing_repeats = a.repeats;
    if (a.mode == "dims") {
      DimsAblationConfig c;
      c.fractions = a.fractions;
      c.splits = a.splits;
      c.seed = a.shared.seed;
      c.inference = io;
      if (!a.methods.empty()) {
        c.reducers.clear();
        for (const auto& m : a.methods) c.reducers.push_back(parse_reducer_method(m));
      }
      rec = ablate_dims(data, ck, c);
    } else {
      SamplingAblationConfig c;
      c.fractions = a.fractions;
      c.splits = a.splits;
      c.seed = a.shared.seed;
      c.inference = io;
      if (!a.methods.empty()) {
        c.samplers.clear();
        for (const auto& m : a.methods) c.samplers.push_back(parse_sampler_method(m));
      }
      rec = ablate_sampling(data, ck, c);
    }
  } else {
    throw UsageError("ablate: unknown mode '" + a.mode + "'");
  }
  rec.environment = environment_note(a.shared.threads, prec);
  emit(rec, a.shared.out);
  return 0;
}

// ---- gen-data --------------------------------------------------------------

struct GenArgs {
  Shared shared;
  std::string kind = "blobs";
  std::size_t rows = 300, features = 5, classes = 2;
  double spread = 6.0, noise = 0.01;
};

int run_gen(const GenArgs& a) {
  if (a.rows < 2) throw UsageError("--rows must be >= 2");
  if (a.features < 1) throw UsageError("--features must be >= 1");
  TabularTask t;
  if (a.kind == "blobs") {
    t = sample_blobs(a.rows, a.features, a.classes, a.spread, a.shared.seed);
  } else if (a.kind == "mlp") {
    PriorSpec p;
    p.min_features = p.max_features = a.features;
    p.max_classes = std::max<std::size_t>(a.classes, 2);
    p.prompt_len = a.rows;
    t = sample_task(p, a.shared.seed);
  } else if (a.kind == "linear") {
    // y = 2·x0 + noise, the remaining columns are distractors
    std::mt19937_64 rng(a.shared.seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    t.kind = TaskKind::regression;
    t.x = Matrix(a.rows, a.features);
    for (auto& v : t.x.values()) v = nd(rng);
    for (std::size_t i = 0; i < a.rows; ++i) t.targets.push_back(2.0 * t.x(i, 0) + a.noise * nd(rng));
  } else {
    throw UsageError("--kind must be blobs, mlp or linear");
  }
  t.n_train = t.rows();
  write_text(a.shared.out, task_to_csv(t));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"linpfn: linear-attention tabular in-context learning"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Pretrain a model on a synthetic prior");
  add_shared(train_cmd, ta.shared);
  train_cmd->add_option("--preset", ta.preset, "toy-s, toy-s-mlp, s100, l100 or h1k")->capture_default_str();
  train_cmd->add_option("--config", ta.config_file, "TrainConfig JSON file");
  train_cmd->add_option("--steps", ta.steps, "Steps per epoch (epochs default to 1)");
  train_cmd->add_option("--epochs", ta.epochs);
  train_cmd->add_option("--batch", ta.batch, "Tasks per step");
  train_cmd->add_option("--lr", ta.lr, "Peak learning rate");
  train_cmd->add_option("--warmup", ta.warmup, "Warmup fraction of total steps");
  train_cmd->add_option("--clip", ta.clip, "Global gradient-norm clip");
  train_cmd->add_option("--prior", ta.prior, "mlp or blobs");
  train_cmd->add_option("--variant", ta.variant, "pfn_linear or pfn_softmax");
  train_cmd->add_flag("--causal", ta.causal, "Causal mask inside the train segment (ablation)");
  train_cmd->add_option("--resume", ta.resume, "Continue from this checkpoint");
  train_cmd->add_option("--loss-csv", ta.loss_csv, "Loss curve path (default <out>.loss.csv)");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate checkpoints on a CSV dataset");
  add_shared(eval_cmd, ea.shared);
  eval_cmd->add_option("dataset", ea.dataset, "CSV file with a header row")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--label", ea.label, "Label column")->required();
  eval_cmd->add_option("--categorical", ea.categorical, "Force these columns categorical");
  eval_cmd->add_option("--checkpoint", ea.checkpoint, "Checkpoint serving every routed model");
  eval_cmd->add_option("--s100", ea.s100);
  eval_cmd->add_option("--l100", ea.l100);
  eval_cmd->add_option("--h1k", ea.h1k);
  eval_cmd->add_option("--router", ea.router, "auto or a forced model choice")
      ->capture_default_str()
      ->check(CLI::IsMember({"auto", "S100", "L100", "H1K", "H1K_with_projection"}));
  eval_cmd->add_option("--splits", ea.splits, "Seeded train/test splits")->capture_default_str();
  eval_cmd->add_option("--test-fraction", ea.test_fraction)->capture_default_str();
  eval_cmd->add_flag("--regression", ea.regression, "Regress via target binning");
  eval_cmd->add_option("--bins", ea.bins)->capture_default_str()->check(CLI::IsMember({10, 100}));
  eval_cmd->add_option("--repeats", ea.repeats, "Timed forward passes per split")->capture_default_str();

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench-attention", "Attention kernel timing and cost counters");
  add_shared(bench_cmd, ba.shared);
  bench_cmd->add_option("--n", ba.ns, "Sequence lengths")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--d", ba.d, "Head width")->capture_default_str();
  bench_cmd->add_option("--block", ba.blocks, "Block sizes")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--variants", ba.variants)->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--repeats", ba.repeats)->capture_default_str();
  bench_cmd->add_flag("--normalize", ba.normalize, "Divide by the key-sum normalizer");

  AblateArgs aa;
  auto* ablate_cmd = app.add_subcommand("ablate", "Ablation experiments");
  add_shared(ablate_cmd, aa.shared);
  ablate_cmd->add_option("mode", aa.mode, "causal, dims, sampling or scaling")
      ->required()
      ->check(CLI::IsMember({"causal", "dims", "sampling", "scaling"}));
  ablate_cmd->add_option("--checkpoint", aa.checkpoint);
  ablate_cmd->add_option("--non-causal", aa.non_causal, "Non-causal checkpoint (causal mode)");
  ablate_cmd->add_option("--causal", aa.causal, "Causal-ablation checkpoint (causal mode)");
  ablate_cmd->add_option("--data", aa.data, "CSV dataset (dims, sampling); synthesized when absent");
  ablate_cmd->add_option("--label", aa.label);
  ablate_cmd->add_option("--contexts", aa.contexts)->delimiter(',')->capture_default_str();
  ablate_cmd->add_option("--tasks", aa.tasks)->capture_default_str();
  ablate_cmd->add_option("--test-rows", aa.test_rows)->capture_default_str();
  ablate_cmd->add_option("--ns", aa.ns)->delimiter(',')->capture_default_str();
  ablate_cmd->add_option("--d", aa.d, "Feature count (scaling)")->capture_default_str();
  ablate_cmd->add_option("--fractions", aa.fractions)->delimiter(',')->capture_default_str();
  ablate_cmd->add_option("--methods", aa.methods, "Reducers or samplers to run")->delimiter(',');
  ablate_cmd->add_option("--splits", aa.splits)->capture_default_str();
  ablate_cmd->add_option("--repeats", aa.repeats)->capture_default_str();
  ablate_cmd->add_option("--rows", aa.rows, "Synthesized dataset rows")->capture_default_str();
  ablate_cmd->add_option("--features", aa.features, "Synthesized dataset features")->capture_default_str();

  GenArgs ga;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic task as CSV");
  add_shared(gen_cmd, ga.shared);
  gen_cmd->add_option("--kind", ga.kind, "blobs, mlp or linear")->capture_default_str();
  gen_cmd->add_option("--rows", ga.rows)->capture_default_str();
  gen_cmd->add_option("--features", ga.features)->capture_default_str();
  gen_cmd->add_option("--classes", ga.classes)->capture_default_str();
  gen_cmd->add_option("--spread", ga.spread, "Blob centre separation")->capture_default_str();
  gen_cmd->add_option("--noise", ga.noise, "Target noise (linear)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train_cmd) return run_train(ta, *train_cmd);
    if (*eval_cmd) return run_eval(ea, *eval_cmd);
    if (*bench_cmd) return run_bench(ba);
    if (*ablate_cmd) return run_ablate(aa);
    if (*gen_cmd) return run_gen(ga);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
