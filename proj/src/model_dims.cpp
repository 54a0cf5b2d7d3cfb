#include "mmax/model_dims.hpp"

#include <numeric>

#include "mmax/errors.hpp"

namespace mmax {

std::string_view to_string(Task task) {
  switch (task) {
    case Task::Sts: return "sts";
    case Task::Entailment: return "entailment";
    case Task::Paraphrase: return "paraphrase";
  }
  return "?";
}

Task parse_task(std::string_view s) {
  if (s == "sts") return Task::Sts;
  if (s == "entailment") return Task::Entailment;
  if (s == "paraphrase") return Task::Paraphrase;
  throw ConfigError("unknown task '" + std::string(s) + "' (expected sts, entailment or paraphrase)");
}

std::string_view to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::MaxLstmCnn: return "maxlstm_cnn";
    case EncoderKind::MaxCnnOnly: return "maxcnn_only";
    case EncoderKind::LstmOnly: return "lstm_only";
    case EncoderKind::WordAverage: return "word_avg";
    case EncoderKind::ProjectAverage: return "proj_avg";
  }
  return "?";
}

std::string_view display_name(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::MaxLstmCnn: return "MaxLSTM-CNN";
    case EncoderKind::MaxCnnOnly: return "Max-CNN";
    case EncoderKind::LstmOnly: return "LSTM";
    case EncoderKind::WordAverage: return "Word Average";
    case EncoderKind::ProjectAverage: return "Project Average";
  }
  return "?";
}

EncoderKind parse_encoder_kind(std::string_view s) {
  for (EncoderKind k : all_encoder_kinds()) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown encoder '" + std::string(s) +
                    "' (expected word_avg, proj_avg, lstm_only, maxcnn_only or maxlstm_cnn)");
}

const std::vector<EncoderKind>& all_encoder_kinds() {
  static const std::vector<EncoderKind> kinds = {EncoderKind::WordAverage, EncoderKind::ProjectAverage,
                                                 EncoderKind::LstmOnly, EncoderKind::MaxCnnOnly,
                                                 EncoderKind::MaxLstmCnn};
  return kinds;
}

std::size_t ModelDims::total_dim() const {
  return std::accumulate(embedding_dims.begin(), embedding_dims.end(), std::size_t{0});
}

std::size_t ModelDims::word_dim() const {
  switch (encoder) {
    case EncoderKind::MaxLstmCnn:
    case EncoderKind::MaxCnnOnly: return filters;
    default: return total_dim();
  }
}

std::size_t ModelDims::sentence_dim() const {
  switch (encoder) {
    case EncoderKind::MaxLstmCnn: return filters + lstm_dim;
    case EncoderKind::MaxCnnOnly: return filters;
    case EncoderKind::LstmOnly: return lstm_dim;
    case EncoderKind::WordAverage:
    case EncoderKind::ProjectAverage: return total_dim();
  }
  return 0;
}

void ModelDims::validate() const {
  if (embedding_dims.empty()) throw ConfigError("model needs at least one embedding table");
  for (std::size_t d : embedding_dims) {
    if (d == 0) throw ConfigError("embedding dimension 0");
  }
  auto positive = [](std::size_t v, const char* key) {
    if (v == 0) throw ConfigError(std::string(key) + " must be positive");
  };
  positive(filters, "filters");
  positive(lstm_dim, "lstm_dim");
  positive(max_len, "max_len");
  positive(d_neu, "d_neu");
  positive(word_sim_dim, "word_sim_dim");
  positive(sent_sim_dim, "sent_sim_dim");
  positive(ws_row_dim, "ws_row_dim");
  positive(ws_sim_dim, "ws_sim_dim");
  positive(hidden_dim, "hidden_dim");
  if (classes < 2) throw ConfigError("output layer needs at least 2 classes/score levels");
}

}  // namespace mmax
