#include "mmax/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "mmax/checkpoint.hpp"
#include "mmax/errors.hpp"
#include "mmax/gradcheck.hpp"
#include "mmax/training.hpp"

namespace mmax {

namespace {

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// Options shared by every subcommand that reads a run config.
struct ConfigOptions {
  std::string config_path;
  std::map<std::string, std::string> overrides;
  CLI::App* app = nullptr;

  void attach(CLI::App* sub) {
    app = sub;
    sub->add_option("--config", config_path, "config file (default: $MMAX_CONFIG)");
    for (const auto& key : RunConfig::keys()) {
      sub->add_option(std::string("--") + key.name, overrides[key.name], key.help);
    }
  }

  bool any_given() const {
    if (!config_path.empty()) return true;
    for (const auto& key : RunConfig::keys()) {
      if (app->count(std::string("--") + key.name) > 0) return true;
    }
    return false;
  }

  // Layers: base, then the config file, then --key overrides.
  RunConfig build(RunConfig base = {}, bool use_env = true) const {
    std::string path = config_path;
    if (path.empty() && use_env) {
      if (const char* env = std::getenv("MMAX_CONFIG")) path = env;
    }
    if (!path.empty()) base.load_file(path);
    for (const auto& key : RunConfig::keys()) {
      if (app->count(std::string("--") + key.name) > 0) base.set_override(key.name, overrides.at(key.name));
    }
    base.validate();
    return base;
  }
};

Model make_model(const RunConfig& cfg, const ModelDims& dims) {
  Model model(dims, cfg.get_double("dropout"));
  Rng init = Rng::stream(cfg.get_u64("seed"), "init");
  model.params().initialize(init);
  return model;
}

int cmd_train(const ConfigOptions& opts, const std::string& train_path, const std::string& valid_path,
              const std::string& out_path, bool lenient, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = opts.build();
  err << cfg.echo();
  auto lex = load_lexicon(cfg);
  const Task task = cfg.task();
  const PairDataset train_set = load_pairs(train_path, task, lenient, &err);
  std::optional<PairDataset> valid_set;
  if (!valid_path.empty()) valid_set = load_pairs(valid_path, task, lenient, &err);

  const ModelDims dims = cfg.model_dims(lex->dims());
  Model model = make_model(cfg, dims);
  const Objective objective{task, cfg.score_spec()};

  out << "epoch\ttrain_loss\tvalid_metric\n";
  const TrainResult result = train(model, *lex, train_set, valid_set ? &*valid_set : nullptr, objective,
                                   cfg.train_config(), [&](const EpochRecord& rec) {
                                     out << rec.epoch << '\t' << fixed(rec.train_loss, 6) << '\t'
                                         << fixed(rec.valid_metric, 6) << '\n';
                                     out.flush();
                                   });
  CheckpointMeta meta;
  meta.dims = dims;
  meta.task = task;
  meta.score = objective.score;
  meta.dropout = model.dropout_p();
  meta.epoch = result.best_epoch;
  meta.config = cfg.values();
  meta.config_fingerprint = cfg.fingerprint();
  save_checkpoint(out_path, model, result.optimizer ? &*result.optimizer : nullptr, meta);
  err << "saved epoch " << result.best_epoch << " to " << out_path << '\n';
  return kExitOk;
}

// Checkpoint config, optionally overlaid with --config/overrides; checked against the stored dims.
struct ReadyModel {
  LoadedCheckpoint ckpt;
  RunConfig cfg;
  std::unique_ptr<FusedLexicon> lex;
};

ReadyModel open_checkpoint(const ConfigOptions& opts, const std::string& path) {
  ReadyModel r{load_checkpoint(path), {}, nullptr};
  const bool overlay = opts.any_given();
  r.cfg = overlay ? opts.build(RunConfig::from_map(r.ckpt.meta.config), false)
                  : RunConfig::from_map(r.ckpt.meta.config);
  if (r.cfg.task() != r.ckpt.meta.task) {
    throw ConfigError("checkpoint was trained for task '" + std::string(to_string(r.ckpt.meta.task)) +
                      "' but task '" + std::string(to_string(r.cfg.task())) + "' was requested");
  }
  r.lex = load_lexicon(r.cfg);
  require_compatible(r.ckpt.meta.dims, r.cfg.model_dims(r.lex->dims()));
  return r;
}

int cmd_eval(const ConfigOptions& opts, const std::string& ckpt_path, const std::string& test_path, bool lenient,
             std::ostream& out, std::ostream& err) {
  ReadyModel r = open_checkpoint(opts, ckpt_path);
  err << r.cfg.echo();
  const PairDataset data = load_pairs(test_path, r.ckpt.meta.task, lenient, &err);
  if (data.examples.empty()) throw DataError("no examples in '" + test_path + "'");
  const Objective objective{r.ckpt.meta.task, r.ckpt.meta.score};
  const EvalResult res = evaluate(*r.ckpt.model, *r.lex, data, objective);
  out << "metric\tvalue\n";
  if (objective.task == Task::Sts) {
    if (!res.pearson) throw NumericError("Pearson correlation undefined: predictions or gold scores are constant");
    out << "pearson_x100\t" << fixed(100.0 * *res.pearson, 2) << '\n';
  } else {
    out << "accuracy\t" << fixed(100.0 * res.classes->accuracy, 2) << '\n';
    if (res.classes->f1) out << "f1\t" << fixed(100.0 * *res.classes->f1, 2) << '\n';
  }
  out << "examples\t" << data.examples.size() << '\n';
  return kExitOk;
}

int cmd_score(const ConfigOptions& opts, const std::string& ckpt_path, const std::string& s1, const std::string& s2,
              std::ostream& out, std::ostream& err) {
  const auto t1 = tokenize(s1);
  const auto t2 = tokenize(s2);
  if (t1.empty() || t2.empty()) throw DataError("score needs two nonempty sentences");
  ReadyModel r = open_checkpoint(opts, ckpt_path);
  err << r.cfg.echo();
  const Vector logits = r.ckpt.model->logits(*r.lex, t1, t2);
  if (r.ckpt.meta.task == Task::Sts) {
    out << fixed(decode_score(logits, r.ckpt.meta.score), 4) << '\n';
  } else {
    out << label_names(r.ckpt.meta.task).at(argmax(logits)) << '\n';
  }
  return kExitOk;
}

int cmd_coverage(const ConfigOptions& opts, const std::vector<std::string>& files, bool lenient, std::ostream& out,
                 std::ostream& err) {
  const RunConfig cfg = opts.build();
  err << cfg.echo();
  auto lex = load_lexicon(cfg);
  std::set<std::string> vocab;
  for (const auto& f : files) {
    const PairDataset d = load_pairs(f, cfg.task(), lenient, &err);
    vocab.insert(d.vocab.begin(), d.vocab.end());
  }
  const CoverageReport rep = lex->coverage(vocab);
  out << "embedding\tvocab_available_pct\n";
  for (std::size_t k = 0; k < rep.per_table.size(); ++k) {
    out << rep.table_names[k] << '\t' << fixed(100.0 * rep.per_table[k], 2) << '\n';
  }
  out << "union\t" << fixed(100.0 * rep.union_fraction, 2) << '\n';
  return kExitOk;
}

int cmd_bench(const ConfigOptions& opts, const std::string& train_path, const std::string& valid_path, bool lenient,
              std::ostream& out, std::ostream& err) {
  const RunConfig cfg = opts.build();
  err << cfg.echo();
  auto lex = load_lexicon(cfg);
  const Task task = cfg.task();
  const PairDataset train_set = load_pairs(train_path, task, lenient, &err);
  std::optional<PairDataset> valid_set;
  if (!valid_path.empty()) valid_set = load_pairs(valid_path, task, lenient, &err);
  const Objective objective{task, cfg.score_spec()};
  const TrainConfig tc = cfg.train_config();

  out << "encoder\tname\tparameters\tepochs\ttrain_loss\ttrain_metric\tvalid_metric\n";
  for (const auto& name : cfg.get_list("bench_encoders")) {
    const EncoderKind kind = parse_encoder_kind(name);
    Model model = make_model(cfg, cfg.model_dims(lex->dims(), kind));
    // No validation-based selection: every column describes the parameters after the last epoch.
    const TrainResult res = train(model, *lex, train_set, nullptr, objective, tc);
    const double loss = mean_loss(model, *lex, train_set, objective);
    const double train_metric = evaluate(model, *lex, train_set, objective).metric;
    const double valid_metric =
        valid_set ? evaluate(model, *lex, *valid_set, objective).metric : std::numeric_limits<double>::quiet_NaN();
    out << to_string(kind) << '\t' << display_name(kind) << '\t' << model.params().entry_count() << '\t'
        << res.history.size() << '\t' << fixed(loss, 6) << '\t' << fixed(train_metric, 6) << '\t'
        << fixed(valid_metric, 6) << '\n';
    out.flush();
  }
  return kExitOk;
}

}  // namespace

PairDataset gradcheck_batch(const FusedLexicon& lex, Task task, const ScoreSpec& score, std::uint64_t seed) {
  std::set<std::string> pool_set;
  for (const auto& t : lex.tables()) pool_set.insert(t.words().begin(), t.words().end());
  std::vector<std::string> pool(pool_set.begin(), pool_set.end());
  // One OOV word always, more if the tables are tiny.
  for (int i = 0; pool.size() < 8 || i == 0; ++i) pool.push_back("gradcheck-oov-" + std::to_string(i));

  Rng rng = Rng::stream(seed, "gradcheck");
  auto sentence = [&](std::size_t n) {
    std::vector<std::string> picked = pool;
    for (std::size_t i = 0; i < n; ++i) std::swap(picked[i], picked[i + rng.below(picked.size() - i)]);
    picked.resize(n);
    return picked;
  };

  PairDataset data;
  data.task = task;
  data.label_names = label_names(task);
  const std::size_t lengths[2][2] = {{3, 5}, {4, 2}};
  for (std::size_t k = 0; k < 2; ++k) {
    SentencePairExample ex;
    ex.tokens1 = sentence(lengths[k][0]);
    ex.tokens2 = sentence(lengths[k][1]);
    if (k == 1) ex.tokens2.back() = "gradcheck-oov-0";
    if (task == Task::Sts) {
      const double frac = k == 0 ? 0.37 : 0.81;
      ex.gold_score = score.raw_min + frac * (score.raw_max - score.raw_min);
    } else if (task == Task::Entailment) {
      ex.gold_label = k == 0 ? 0 : 2;
    } else {
      ex.gold_label = k == 0 ? 1 : 0;
    }
    data.vocab.insert(ex.tokens1.begin(), ex.tokens1.end());
    data.vocab.insert(ex.tokens2.begin(), ex.tokens2.end());
    data.examples.push_back(std::move(ex));
  }
  return data;
}

GradCheckOutcome run_gradcheck(const RunConfig& cfg, std::ostream& out, const GradientHook& hook) {
  auto lex = load_lexicon(cfg);
  const std::uint64_t seed = cfg.get_u64("seed");
  GradCheckOutcome outcome;
  out << "task\tparameter\tentries\tmax_rel_error\tworst_analytic\tworst_numeric\n";
  for (Task task : {Task::Sts, Task::Entailment, Task::Paraphrase}) {
    RunConfig task_cfg = cfg;
    task_cfg.set("task", std::string(to_string(task)));
    Model model(task_cfg.model_dims(lex->dims()), 0.0);
    Rng init = Rng::stream(seed, "init");
    model.params().initialize(init);
    const Objective objective{task, task_cfg.score_spec()};
    const PairDataset batch = gradcheck_batch(*lex, task, objective.score, seed);

    const LossFn loss = [&](bool with_grad) -> long double {
      if (!with_grad) return batch_loss_extended(model, *lex, batch.examples, objective);
      const double value = batch_objective(model, *lex, batch.examples, objective, true);
      if (hook) hook(model, task);
      return value;
    };
    const auto params = model.params().all();
    const GradCheckReport report = grad_check(loss, params, kGradCheckStep);
    for (const auto& e : report.params) {
      out << to_string(task) << '\t' << e.name << '\t' << e.entries << '\t' << sci(e.max_rel_error) << '\t' << sci(e.worst_analytic)
          << '\t' << sci(e.worst_numeric) << '\n';
    }
    for (const auto& name : report.failing(kGradCheckTolerance)) {
      outcome.failing.push_back(std::string(to_string(task)) + ":" + name);
    }
    outcome.max_rel_error = std::max(outcome.max_rel_error, report.max_rel_error);
  }
  outcome.passed = outcome.failing.empty();
  out << "overall\tall\t-\t" << sci(outcome.max_rel_error) << '\t' << (outcome.passed ? "PASS" : "FAIL") << '\n';
  return outcome;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mmax: multi-embedding MaxLSTM-CNN sentence-pair models"};
  app.require_subcommand(1);

  bool lenient = false;
  std::string train_path, valid_path, out_path, ckpt_path, test_path, s1, s2;
  std::vector<std::string> files;

  ConfigOptions train_opts, eval_opts, score_opts, grad_opts, cov_opts, bench_opts;

  auto* train_cmd = app.add_subcommand("train", "train a model and write the best checkpoint");
  train_opts.attach(train_cmd);
  train_cmd->add_option("--train", train_path, "training TSV")->required();
  train_cmd->add_option("--valid", valid_path, "validation TSV");
  train_cmd->add_option("--out", out_path, "checkpoint to write")->required();
  train_cmd->add_flag("--lenient", lenient, "skip malformed data lines");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a test file");
  eval_opts.attach(eval_cmd);
  eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  eval_cmd->add_option("--test", test_path, "test TSV")->required();
  eval_cmd->add_flag("--lenient", lenient, "skip malformed data lines");

  auto* score_cmd = app.add_subcommand("score", "score one sentence pair");
  score_opts.attach(score_cmd);
  score_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  score_cmd->add_option("sentence1", s1, "first sentence")->required();
  score_cmd->add_option("sentence2", s2, "second sentence")->required();

  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of every parameter gradient");
  grad_opts.attach(grad_cmd);

  auto* cov_cmd = app.add_subcommand("coverage", "vocabulary coverage of each embedding table");
  cov_opts.attach(cov_cmd);
  cov_cmd->add_option("files", files, "data TSV files")->required();
  cov_cmd->add_flag("--lenient", lenient, "skip malformed data lines");

  auto* bench_cmd = app.add_subcommand("bench", "train and compare the encoder variants");
  bench_opts.attach(bench_cmd);
  bench_cmd->add_option("--train", train_path, "training TSV")->required();
  bench_cmd->add_option("--valid", valid_path, "validation TSV");
  bench_cmd->add_flag("--lenient", lenient, "skip malformed data lines");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_opts, train_path, valid_path, out_path, lenient, out, err);
    if (eval_cmd->parsed()) return cmd_eval(eval_opts, ckpt_path, test_path, lenient, out, err);
    if (score_cmd->parsed()) return cmd_score(score_opts, ckpt_path, s1, s2, out, err);
    if (cov_cmd->parsed()) return cmd_coverage(cov_opts, files, lenient, out, err);
    if (bench_cmd->parsed()) return cmd_bench(bench_opts, train_path, valid_path, lenient, out, err);
    if (grad_cmd->parsed()) {
      const RunConfig cfg = grad_opts.build();
      err << cfg.echo();
      const GradCheckOutcome res = run_gradcheck(cfg, out);
      for (const auto& f : res.failing) err << "gradient mismatch: " << f << '\n';
      return res.passed ? kExitOk : kExitConfig;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ShapeError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitConfig;
}

}  // namespace mmax
