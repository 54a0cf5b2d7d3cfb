#pragma once

#include <span>
#include <string>
#include <vector>

#include "mmax/comparison.hpp"
#include "mmax/embeddings.hpp"
#include "mmax/encoder.hpp"
#include "mmax/evaldata.hpp"
#include "mmax/model_dims.hpp"
#include "mmax/objectives.hpp"
#include "mmax/tape.hpp"

namespace mmax {

// All trainable tensors. Embedding vectors are never part of this.
struct ModelParams {
  EncoderParams encoder;
  ComparisonParams comparison;
  HeadParams head;

  explicit ModelParams(const ModelDims& dims);

  // Canonical order: encoder, comparison, head. Checkpoints and the optimizer rely on it.
  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::size_t entry_count() const;
  void zero_grad();

  // Glorot-uniform weights, zero biases, forget-gate bias 1.
  void initialize(Rng& init);
};

class Model {
 public:
  Model(ModelDims dims, double dropout_p);

  const ModelDims& dims() const { return dims_; }
  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }
  double dropout_p() const { return dropout_p_; }

  // Logits for one sentence pair. Dropout is active only when training.
  template <typename T>
  Var forward(BasicTape<T>& t, const FusedLexicon& lex, const std::vector<std::string>& tokens1,
              const std::vector<std::string>& tokens2, bool training, Rng& dropout_rng);

  // Inference-mode logits (no dropout, nothing recorded).
  Vector logits(const FusedLexicon& lex, const std::vector<std::string>& tokens1,
                const std::vector<std::string>& tokens2);

 private:
  ModelDims dims_;
  ModelParams params_;
  double dropout_p_;
};

// The task's loss on one example's logits: KL to the sparse target for sts,
// cross-entropy otherwise.
struct Objective {
  Task task = Task::Sts;
  ScoreSpec score;

  template <typename T>
  Var loss(BasicTape<T>& t, Var logits, const SentencePairExample& ex) const;
  double loss_value(std::span<const double> logits, const SentencePairExample& ex) const;
};

}  // namespace mmax
