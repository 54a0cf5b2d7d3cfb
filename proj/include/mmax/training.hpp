#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mmax/embeddings.hpp"
#include "mmax/evaldata.hpp"
#include "mmax/model.hpp"

namespace mmax {

// Zeiler's AdaDelta. Accumulators mirror the parameter list entry for entry.
class AdaDeltaState {
 public:
  AdaDeltaState(std::span<Parameter* const> params, double rho = 0.95, double epsilon = 1e-6);
  AdaDeltaState(std::vector<Matrix> eg2, std::vector<Matrix> edx2, double rho, double epsilon);

  // Applies one update from each Parameter::grad.
  void step(std::span<Parameter* const> params);

  double rho() const { return rho_; }
  double epsilon() const { return epsilon_; }
  const std::vector<Matrix>& mean_sq_grad() const { return eg2_; }
  const std::vector<Matrix>& mean_sq_update() const { return edx2_; }

 private:
  std::vector<Matrix> eg2_;
  std::vector<Matrix> edx2_;
  double rho_;
  double epsilon_;
};

struct TrainConfig {
  std::size_t batch_size = 30;
  std::size_t epochs = 50;
  std::size_t patience = 10;
  double rho = 0.95;
  double epsilon = 1e-6;
  double weight_decay = 0.0;
  double clip_norm = 0.0;  // 0 disables global-norm clipping
  std::uint64_t seed = 1234;
  bool shuffle = true;
};

struct EpochRecord {
  std::size_t epoch = 0;        // 1-based
  double train_loss = 0.0;      // mean per-example loss over the epoch's batches
  double valid_metric = 0.0;    // Pearson (sts) or accuracy; NaN without validation data
};

struct EvalResult {
  double metric = 0.0;                 // Pearson or accuracy; NaN if undefined
  std::optional<double> pearson;       // sts
  std::optional<ClassificationMetrics> classes;
  std::vector<double> predictions;     // raw-range scores, or class indices
};

EvalResult evaluate(Model& model, const FusedLexicon& lex, const PairDataset& data, const Objective& objective);
// Mean inference-mode loss over `batch`; with_grad also leaves the gradient
// of that mean in each Parameter::grad (zeroed first).
double batch_objective(Model& model, const FusedLexicon& lex, std::span<const SentencePairExample> batch,
                       const Objective& objective, bool with_grad);
// Same mean loss, with the forward pass evaluated in long double. Used as
// the finite-difference side of gradient checks.
long double batch_loss_extended(Model& model, const FusedLexicon& lex, std::span<const SentencePairExample> batch,
                                const Objective& objective);
// Mean inference-mode loss.
double mean_loss(Model& model, const FusedLexicon& lex, const PairDataset& data, const Objective& objective);

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_metric = 0.0;
  std::size_t steps = 0;
  std::optional<AdaDeltaState> optimizer;  // state after the last step
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch AdaDelta training. Embedding vectors are read-only throughout.
// With validation data, the model is left holding the best-scoring epoch's
// parameters and training stops after `patience` epochs without improvement.
// Throws NumericError on a non-finite batch loss.
TrainResult train(Model& model, const FusedLexicon& lex, const PairDataset& train_set, const PairDataset* valid_set,
                  const Objective& objective, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace mmax
