#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmax/embeddings.hpp"
#include "mmax/model_dims.hpp"
#include "mmax/tape.hpp"

namespace mmax {

// Gate weights of one LSTM layer; input weights are l x input_dim, recurrent l x l.
struct LstmParams {
  Parameter W_i, W_f, W_o, W_u;
  Parameter U_i, U_f, U_o, U_u;
  Parameter b_i, b_f, b_o, b_u;

  LstmParams(const std::string& prefix, std::size_t input_dim, std::size_t hidden);
  std::size_t input_dim() const { return W_i.value.cols(); }
  std::size_t hidden_dim() const { return W_i.value.rows(); }
  void collect(std::vector<Parameter*>& out);
};

// H width-one filters over the concatenated word vector.
struct FilterBank {
  Parameter R;     // H x total_dim, row i is filter r_i
  Parameter bias;  // H x 1, per-filter bias
  FilterBank(std::size_t filters, std::size_t input_dim);
};

// sigma(W mean + b) for the Project Average baseline.
struct Projection {
  Parameter W;
  Parameter b;
  explicit Projection(std::size_t dim);
};

// Only the groups used by `kind` are present.
struct EncoderParams {
  EncoderKind kind;
  std::size_t input_dim;
  std::optional<FilterBank> filters;
  std::optional<LstmParams> lstm;
  std::optional<Projection> projection;

  explicit EncoderParams(const ModelDims& dims);
  void collect(std::vector<Parameter*>& out);
};

// Tape-level result of encoding one sentence.
struct EncodedSentence {
  std::vector<Var> words;  // per-token rows for word-level comparisons
  Var sentence;            // e_s
};

// e_multi = sigma(R e_concat + b_r)
template <typename T>
Var multi_aspect(BasicTape<T>& t, FilterBank& bank, Var e_concat);
// h_n of the LSTM recurrence with h_0 = c_0 = 0.
template <typename T>
Var lstm_final_state(BasicTape<T>& t, LstmParams& lstm, std::span<const Var> inputs);
// Encodes the fused embedding rows of one sentence according to params.kind.
template <typename T>
EncodedSentence encode(BasicTape<T>& t, EncoderParams& params, std::span<const Var> e_concat_rows);

// Fused embedding rows for a token sequence as tape constants.
template <typename T>
std::vector<Var> embed_tokens(BasicTape<T>& t, const FusedLexicon& lex, const std::vector<std::string>& tokens);

// ---- value-level API --------------------------------------------------------

struct SentenceEncoding {
  Matrix s_multi;  // n x H
  Vector e_max;    // H
  Vector e_lstm;   // l
  Vector e_s;      // H + l
};

Vector multi_aspect(FilterBank& bank, std::span<const double> e_concat);
// Full MaxLSTM-CNN encoding; params.kind must be MaxLstmCnn.
SentenceEncoding encode_sentence(EncoderParams& params, const FusedLexicon& lex,
                                 const std::vector<std::string>& tokens);
// Sentence vector of any encoder kind (params.kind selects it).
Vector encode_baseline(EncoderParams& params, const FusedLexicon& lex, const std::vector<std::string>& tokens);

}  // namespace mmax
