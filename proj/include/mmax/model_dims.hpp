#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mmax {

enum class Task { Sts, Entailment, Paraphrase };

std::string_view to_string(Task task);
Task parse_task(std::string_view s);  // throws ConfigError

// Sentence encoders. MaxLstmCnn is the full model; the rest are the ablation baselines.
enum class EncoderKind { MaxLstmCnn, MaxCnnOnly, LstmOnly, WordAverage, ProjectAverage };

std::string_view to_string(EncoderKind kind);
EncoderKind parse_encoder_kind(std::string_view s);  // throws ConfigError
const std::vector<EncoderKind>& all_encoder_kinds();
// Human-readable name used in bench tables.
std::string_view display_name(EncoderKind kind);

// Every size that determines parameter shapes.
struct ModelDims {
  EncoderKind encoder = EncoderKind::MaxLstmCnn;
  std::vector<std::size_t> embedding_dims;
  std::size_t filters = 1600;   // H
  std::size_t lstm_dim = 1600;  // l
  std::size_t max_len = 32;     // L
  std::size_t d_neu = 128;
  std::size_t classes = 6;      // C: class count, or score_k for STS
  std::size_t word_sim_dim = 50;
  std::size_t sent_sim_dim = 5;
  std::size_t ws_row_dim = 5;
  std::size_t ws_sim_dim = 100;
  std::size_t hidden_dim = 250;

  std::size_t total_dim() const;
  // Width of per-word rows fed to word-level comparisons: H for filter-based
  // encoders, the raw concatenated embedding otherwise.
  std::size_t word_dim() const;
  // Width of the sentence embedding e_s.
  std::size_t sentence_dim() const;
  std::size_t head_input_dim() const { return word_sim_dim + sent_sim_dim + ws_sim_dim; }

  // Throws ConfigError on zero sizes.
  void validate() const;

  bool operator==(const ModelDims&) const = default;
};

}  // namespace mmax
