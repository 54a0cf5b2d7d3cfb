#pragma once

#include <span>
#include <utility>
#include <vector>

#include "mmax/matrix.hpp"
#include "mmax/model_dims.hpp"
#include "mmax/tape.hpp"

namespace mmax {

// Weights of the three comparison levels. W_ws2 is the second word-sentence layer.
struct ComparisonParams {
  std::size_t max_len;
  Parameter W_word, b_word;  // word_sim x L^2
  Parameter W_neu, b_neu;    // d_neu x 2 sent_dim
  Parameter W_sent, b_sent;  // sent_sim x (1 + 2 sent_dim + d_neu)
  Parameter W_ws, b_ws;      // ws_row x (sent_dim + word_dim)
  Parameter W_ws2, b_ws2;    // ws_sim x (2 L ws_row)

  explicit ComparisonParams(const ModelDims& dims);
  void collect(std::vector<Parameter*>& out);
};

struct HeadParams {
  Parameter W_l1, b_l1;  // hidden x (word_sim + sent_sim + ws_sim)
  Parameter W_l2, b_l2;  // C x hidden

  explicit HeadParams(const ModelDims& dims);
  void collect(std::vector<Parameter*>& out);
};

// First min(n, L) rows, then zero rows up to L. Trailing tokens are dropped.
Matrix pad_or_truncate(const Matrix& rows, std::size_t L);
template <typename T>
std::vector<Var> pad_or_truncate(BasicTape<T>& t, std::span<const Var> rows, std::size_t L);

// Row-major flatten of A[i][j] = cosine(s1[i], s2[j]).
template <typename T>
Var word_word_matrix(BasicTape<T>& t, std::span<const Var> s1, std::span<const Var> s2);
// sim_word = sigma(W_word g(A) + b_word); inputs already padded to L rows.
template <typename T>
Var word_word(BasicTape<T>& t, ComparisonParams& p, std::span<const Var> s1, std::span<const Var> s2);

// d_sent = cos ⊕ (e1 ⊙ e2) ⊕ |e1 - e2| ⊕ (W_neu (e1 ⊕ e2) + b_neu)
template <typename T>
Var sentence_features(BasicTape<T>& t, ComparisonParams& p, Var e1, Var e2);
template <typename T>
Var sentence_sentence(BasicTape<T>& t, ComparisonParams& p, Var e1, Var e2);

// Flattened L x ws_row similarity matrices: (e1 vs rows of s2, e2 vs rows of s1).
template <typename T>
std::pair<Var, Var> word_sentence_matrices(BasicTape<T>& t, ComparisonParams& p, Var e1, Var e2, std::span<const Var> s1,
                                           std::span<const Var> s2);
template <typename T>
Var word_sentence(BasicTape<T>& t, ComparisonParams& p, Var e1, Var e2, std::span<const Var> s1, std::span<const Var> s2);

// logits = W_l2 dropout(sigma(W_l1 (sim_word ⊕ sim_sent ⊕ sim_ws) + b_l1)) + b_l2
template <typename T>
Var fuse_head(BasicTape<T>& t, HeadParams& head, Var sim_word, Var sim_sent, Var sim_ws, double dropout_p, bool training,
              Rng& rng);

}  // namespace mmax
