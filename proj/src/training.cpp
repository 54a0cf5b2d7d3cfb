#include "mmax/training.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mmax/errors.hpp"

namespace mmax {

AdaDeltaState::AdaDeltaState(std::span<Parameter* const> params, double rho, double epsilon)
    : rho_(rho), epsilon_(epsilon) {
  if (!(rho_ > 0.0 && rho_ < 1.0)) throw ConfigError("rho must lie in (0, 1)");
  if (!(epsilon_ > 0.0)) throw ConfigError("epsilon must be positive");
  for (const Parameter* p : params) {
    eg2_.emplace_back(p->value.rows(), p->value.cols(), 0.0);
    edx2_.emplace_back(p->value.rows(), p->value.cols(), 0.0);
  }
}

AdaDeltaState::AdaDeltaState(std::vector<Matrix> eg2, std::vector<Matrix> edx2, double rho, double epsilon)
    : eg2_(std::move(eg2)), edx2_(std::move(edx2)), rho_(rho), epsilon_(epsilon) {
  if (eg2_.size() != edx2_.size()) throw ShapeError("AdaDelta accumulator lists differ in length");
}

void AdaDeltaState::step(std::span<Parameter* const> params) {
  if (params.size() != eg2_.size()) {
    throw ShapeError("AdaDelta state tracks " + std::to_string(eg2_.size()) + " parameters, got " +
                     std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    if (p.value.rows() != eg2_[k].rows() || p.value.cols() != eg2_[k].cols()) {
      throw ShapeError("AdaDelta: parameter " + p.name + " is " + p.value.shape() + ", state is " + eg2_[k].shape());
    }
    auto theta = p.value.data();
    auto g = p.grad.data();
    auto eg2 = eg2_[k].data();
    auto edx2 = edx2_[k].data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      eg2[i] = rho_ * eg2[i] + (1.0 - rho_) * g[i] * g[i];
      const double delta = -(std::sqrt(edx2[i] + epsilon_) / std::sqrt(eg2[i] + epsilon_)) * g[i];
      edx2[i] = rho_ * edx2[i] + (1.0 - rho_) * delta * delta;
      theta[i] += delta;
    }
  }
}

EvalResult evaluate(Model& model, const FusedLexicon& lex, const PairDataset& data, const Objective& objective) {
  EvalResult out;
  out.predictions.reserve(data.examples.size());
  if (objective.task == Task::Sts) {
    std::vector<double> gold;
    for (const auto& ex : data.examples) {
      out.predictions.push_back(decode_score(model.logits(lex, ex.tokens1, ex.tokens2), objective.score));
      gold.push_back(ex.gold_score.value());
    }
    try {
      out.pearson = pearson(out.predictions, gold);
      out.metric = *out.pearson;
    } catch (const UndefinedMetricError&) {
      out.metric = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
  }
  std::vector<std::size_t> gold, pred;
  for (const auto& ex : data.examples) {
    const std::size_t c = argmax(model.logits(lex, ex.tokens1, ex.tokens2));
    pred.push_back(c);
    gold.push_back(ex.gold_label.value());
    out.predictions.push_back(static_cast<double>(c));
  }
  out.classes = classification_metrics(gold, pred, objective.task == Task::Paraphrase);
  out.metric = out.classes->accuracy;
  return out;
}

double mean_loss(Model& model, const FusedLexicon& lex, const PairDataset& data, const Objective& objective) {
  double total = 0.0;
  for (const auto& ex : data.examples) total += objective.loss_value(model.logits(lex, ex.tokens1, ex.tokens2), ex);
  return total / static_cast<double>(data.examples.size());
}

double batch_objective(Model& model, const FusedLexicon& lex, std::span<const SentencePairExample> batch,
                       const Objective& objective, bool with_grad) {
  if (batch.empty()) throw DataError("empty batch");
  const double inv_m = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  if (with_grad) model.params().zero_grad();
  Rng unused;
  for (const auto& ex : batch) {
    Tape tape(with_grad);
    Var logits = model.forward(tape, lex, ex.tokens1, ex.tokens2, false, unused);
    Var loss = objective.loss(tape, logits, ex);
    total += tape.scalar(loss);
    if (with_grad) tape.backward(loss);
  }
  if (with_grad) {
    for (Parameter* p : model.params().all()) {
      for (double& g : p->grad.data()) g *= inv_m;
    }
  }
  return total * inv_m;
}

long double batch_loss_extended(Model& model, const FusedLexicon& lex, std::span<const SentencePairExample> batch,
                                const Objective& objective) {
  if (batch.empty()) throw DataError("empty batch");
  long double total = 0;
  Rng unused;
  for (const auto& ex : batch) {
    ExtendedTape tape(false);
    Var logits = model.forward(tape, lex, ex.tokens1, ex.tokens2, false, unused);
    total += tape.scalar(objective.loss(tape, logits, ex));
  }
  return total / static_cast<long double>(batch.size());
}

namespace {

void clip_global_norm(std::span<Parameter* const> params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    for (double g : p->grad.data()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  for (Parameter* p : params) {
    for (double& g : p->grad.data()) g *= scale;
  }
}

}  // namespace

TrainResult train(Model& model, const FusedLexicon& lex, const PairDataset& train_set, const PairDataset* valid_set,
                  const Objective& objective, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  if (train_set.examples.empty()) throw DataError("training set is empty");
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be at least 1");

  auto params = model.params().all();
  TrainResult result;
  AdaDeltaState optimizer(params, cfg.rho, cfg.epsilon);
  Rng dropout_rng = Rng::stream(cfg.seed, "dropout");
  Rng shuffle_rng = Rng::stream(cfg.seed, "shuffle");

  const std::size_t n = train_set.examples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::optional<ModelParams> best;
  double best_metric = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::size_t batch_index = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.shuffle) {
      for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      const double inv_m = 1.0 / static_cast<double>(end - start);
      model.params().zero_grad();
      double batch_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const auto& ex = train_set.examples[order[b]];
        Tape tape;
        Var logits = model.forward(tape, lex, ex.tokens1, ex.tokens2, true, dropout_rng);
        Var loss = objective.loss(tape, logits, ex);
        batch_loss += tape.scalar(loss);
        tape.backward(loss);
      }
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "non-finite loss in epoch " << epoch << ", batch " << batch_index << " (examples " << start << ".."
            << end - 1 << " of the shuffled order)";
        throw NumericError(msg.str());
      }
      for (Parameter* p : params) {
        auto g = p->grad.data();
        auto v = p->value.data();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = g[i] * inv_m + cfg.weight_decay * v[i];
      }
      if (cfg.clip_norm > 0.0) clip_global_norm(params, cfg.clip_norm);
      optimizer.step(params);
      ++result.steps;
      epoch_loss += batch_loss;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(n);
    rec.valid_metric = std::numeric_limits<double>::quiet_NaN();
    bool stop = false;
    if (valid_set && !valid_set->examples.empty()) {
      rec.valid_metric = evaluate(model, lex, *valid_set, objective).metric;
      const double m = std::isnan(rec.valid_metric) ? -std::numeric_limits<double>::infinity() : rec.valid_metric;
      if (!best || m > best_metric) {
        best = model.params();
        best_metric = m;
        result.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        stop = true;
      }
    } else {
      result.best_epoch = epoch;
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (stop) break;
  }

  result.optimizer = std::move(optimizer);
  if (best) {
    auto dst = model.params().all();
    auto src = best->all();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k]->value = src[k]->value;
    result.best_metric = best_metric;
  } else {
    result.best_metric = std::numeric_limits<double>::quiet_NaN();
  }
  model.params().zero_grad();
  return result;
}

}  // namespace mmax
