#include "mmax/model.hpp"

#include <cmath>

#include "mmax/errors.hpp"

namespace mmax {

ModelParams::ModelParams(const ModelDims& dims) : encoder(dims), comparison(dims), head(dims) {}

std::vector<Parameter*> ModelParams::all() {
  std::vector<Parameter*> out;
  encoder.collect(out);
  comparison.collect(out);
  head.collect(out);
  return out;
}

std::vector<const Parameter*> ModelParams::all() const {
  auto mut = const_cast<ModelParams*>(this)->all();
  return {mut.begin(), mut.end()};
}

std::size_t ModelParams::entry_count() const {
  std::size_t n = 0;
  for (const Parameter* p : all()) n += p->value.size();
  return n;
}

void ModelParams::zero_grad() {
  for (Parameter* p : all()) p->zero_grad();
}

void ModelParams::initialize(Rng& init) {
  for (Parameter* p : all()) {
    Matrix& v = p->value;
    if (v.cols() == 1) {
      v.fill(0.0);
      continue;
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(v.rows() + v.cols()));
    for (double& x : v.data()) x = init.uniform(-bound, bound);
  }
  if (encoder.lstm) encoder.lstm->b_f.value.fill(1.0);
  zero_grad();
}

Model::Model(ModelDims dims, double dropout_p) : dims_(std::move(dims)), params_((dims_.validate(), dims_)), dropout_p_(dropout_p) {
  if (!(dropout_p_ >= 0.0 && dropout_p_ < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

template <typename T>
Var Model::forward(BasicTape<T>& t, const FusedLexicon& lex, const std::vector<std::string>& tokens1,
                   const std::vector<std::string>& tokens2, bool training, Rng& dropout_rng) {
  if (lex.total_dim() != dims_.total_dim()) {
    throw ShapeError("lexicon width " + std::to_string(lex.total_dim()) + " does not match model input width " +
                     std::to_string(dims_.total_dim()));
  }
  auto rows1 = embed_tokens(t, lex, tokens1);
  auto rows2 = embed_tokens(t, lex, tokens2);
  EncodedSentence s1 = encode(t, params_.encoder, rows1);
  EncodedSentence s2 = encode(t, params_.encoder, rows2);

  auto& cmp = params_.comparison;
  auto w1 = pad_or_truncate(t, s1.words, dims_.max_len);
  auto w2 = pad_or_truncate(t, s2.words, dims_.max_len);
  Var sim_word = word_word(t, cmp, w1, w2);
  Var sim_sent = sentence_sentence(t, cmp, s1.sentence, s2.sentence);
  Var sim_ws = word_sentence(t, cmp, s1.sentence, s2.sentence, w1, w2);
  return fuse_head(t, params_.head, sim_word, sim_sent, sim_ws, dropout_p_, training, dropout_rng);
}

Vector Model::logits(const FusedLexicon& lex, const std::vector<std::string>& tokens1,
                     const std::vector<std::string>& tokens2) {
  Tape t(false);
  Rng unused;
  Var out = forward(t, lex, tokens1, tokens2, false, unused);
  auto v = t.value(out);
  return {v.begin(), v.end()};
}

namespace {

TargetDistribution target_for(const ScoreSpec& score, const SentencePairExample& ex) {
  if (!ex.gold_score) throw DataError("sts objective needs a gold score");
  const double raw = *ex.gold_score;
  if (raw < score.raw_min || raw > score.raw_max) {
    throw DataError("gold score " + std::to_string(raw) + " outside [" + std::to_string(score.raw_min) + ", " +
                    std::to_string(score.raw_max) + "]");
  }
  // Clamp guards the affine map's last-bit rounding at the range ends.
  const double y = std::clamp(score.to_mapped(raw), 1.0, static_cast<double>(score.K));
  return sparse_target(y, score.K);
}

std::size_t label_for(const SentencePairExample& ex) {
  if (!ex.gold_label) throw DataError("classification objective needs a gold label");
  return *ex.gold_label;
}

}  // namespace

template <typename T>
Var Objective::loss(BasicTape<T>& t, Var logits, const SentencePairExample& ex) const {
  if (task == Task::Sts) return kl_loss(t, logits, target_for(score, ex));
  return ce_loss(t, logits, label_for(ex));
}

double Objective::loss_value(std::span<const double> logits, const SentencePairExample& ex) const {
  if (task == Task::Sts) return kl_divergence(target_for(score, ex), logits);
  return cross_entropy(label_for(ex), logits);
}

template Var Model::forward(Tape&, const FusedLexicon&, const std::vector<std::string>&,
                            const std::vector<std::string>&, bool, Rng&);
template Var Model::forward(ExtendedTape&, const FusedLexicon&, const std::vector<std::string>&,
                            const std::vector<std::string>&, bool, Rng&);
template Var Objective::loss(Tape&, Var, const SentencePairExample&) const;
template Var Objective::loss(ExtendedTape&, Var, const SentencePairExample&) const;

}  // namespace mmax
