#include "mmax/comparison.hpp"

#include "mmax/errors.hpp"

namespace mmax {

ComparisonParams::ComparisonParams(const ModelDims& d)
    : max_len(d.max_len),
      W_word("comparison.W_word", d.word_sim_dim, d.max_len * d.max_len),
      b_word("comparison.b_word", d.word_sim_dim, 1),
      W_neu("comparison.W_neu", d.d_neu, 2 * d.sentence_dim()),
      b_neu("comparison.b_neu", d.d_neu, 1),
      W_sent("comparison.W_sent", d.sent_sim_dim, 1 + 2 * d.sentence_dim() + d.d_neu),
      b_sent("comparison.b_sent", d.sent_sim_dim, 1),
      W_ws("comparison.W_ws", d.ws_row_dim, d.sentence_dim() + d.word_dim()),
      b_ws("comparison.b_ws", d.ws_row_dim, 1),
      W_ws2("comparison.W_ws2", d.ws_sim_dim, 2 * d.max_len * d.ws_row_dim),
      b_ws2("comparison.b_ws2", d.ws_sim_dim, 1) {}

void ComparisonParams::collect(std::vector<Parameter*>& out) {
  for (Parameter* p : {&W_word, &b_word, &W_neu, &b_neu, &W_sent, &b_sent, &W_ws, &b_ws, &W_ws2, &b_ws2}) {
    out.push_back(p);
  }
}

HeadParams::HeadParams(const ModelDims& d)
    : W_l1("head.W_l1", d.hidden_dim, d.head_input_dim()),
      b_l1("head.b_l1", d.hidden_dim, 1),
      W_l2("head.W_l2", d.classes, d.hidden_dim),
      b_l2("head.b_l2", d.classes, 1) {}

void HeadParams::collect(std::vector<Parameter*>& out) {
  for (Parameter* p : {&W_l1, &b_l1, &W_l2, &b_l2}) out.push_back(p);
}

Matrix pad_or_truncate(const Matrix& rows, std::size_t L) {
  if (rows.rows() == 0) throw ShapeError("pad_or_truncate of an empty sequence");
  Matrix out(L, rows.cols(), 0.0);
  for (std::size_t r = 0; r < std::min(rows.rows(), L); ++r) {
    std::copy(rows.row(r).begin(), rows.row(r).end(), out.row(r).begin());
  }
  return out;
}

template <typename T>
std::vector<Var> pad_or_truncate(BasicTape<T>& t, std::span<const Var> rows, std::size_t L) {
  if (rows.empty()) throw ShapeError("pad_or_truncate of an empty sequence");
  std::vector<Var> out(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(std::min(rows.size(), L)));
  if (out.size() < L) {
    Var zero = t.constant(Vector(t.size(rows[0]), 0.0));
    out.resize(L, zero);
  }
  return out;
}

template <typename T>
Var word_word_matrix(BasicTape<T>& t, std::span<const Var> s1, std::span<const Var> s2) {
  std::vector<Var> entries;
  entries.reserve(s1.size() * s2.size());
  for (Var a : s1) {
    for (Var b : s2) entries.push_back(cosine(t, a, b));
  }
  return concat(t, entries);
}

template <typename T>
Var word_word(BasicTape<T>& t, ComparisonParams& p, std::span<const Var> s1, std::span<const Var> s2) {
  if (s1.size() != p.max_len || s2.size() != p.max_len) {
    throw ShapeError("word_word: inputs have " + std::to_string(s1.size()) + " and " + std::to_string(s2.size()) +
                     " rows, expected L = " + std::to_string(p.max_len));
  }
  return sigmoid(t, linear(t, word_word_matrix(t, s1, s2), p.W_word, p.b_word));
}

template <typename T>
Var sentence_features(BasicTape<T>& t, ComparisonParams& p, Var e1, Var e2) {
  require_same_length(t.size(e1), t.size(e2), "sentence_sentence");
  const Var pair[] = {e1, e2};
  const Var parts[] = {cosine(t, e1, e2), elementwise_mul(t, e1, e2), abs_diff(t, e1, e2),
                       linear(t, concat(t, pair), p.W_neu, p.b_neu)};
  return concat(t, parts);
}

template <typename T>
Var sentence_sentence(BasicTape<T>& t, ComparisonParams& p, Var e1, Var e2) {
  return sigmoid(t, linear(t, sentence_features(t, p, e1, e2), p.W_sent, p.b_sent));
}

namespace {

template <typename T>
Var sentence_vs_words(BasicTape<T>& t, ComparisonParams& p, Var e, std::span<const Var> words) {
  std::vector<Var> rows;
  rows.reserve(words.size());
  for (Var w : words) {
    const Var parts[] = {e, w};
    rows.push_back(sigmoid(t, linear(t, concat(t, parts), p.W_ws, p.b_ws)));
  }
  return concat(t, rows);
}

}  // namespace

template <typename T>
std::pair<Var, Var> word_sentence_matrices(BasicTape<T>& t, ComparisonParams& p, Var e1, Var e2, std::span<const Var> s1,
                                           std::span<const Var> s2) {
  if (s1.size() != p.max_len || s2.size() != p.max_len) {
    throw ShapeError("word_sentence: word matrices must have L = " + std::to_string(p.max_len) + " rows");
  }
  return {sentence_vs_words(t, p, e1, s2), sentence_vs_words(t, p, e2, s1)};
}

template <typename T>
Var word_sentence(BasicTape<T>& t, ComparisonParams& p, Var e1, Var e2, std::span<const Var> s1, std::span<const Var> s2) {
  auto [m1, m2] = word_sentence_matrices(t, p, e1, e2, s1, s2);
  const Var parts[] = {m1, m2};
  return sigmoid(t, linear(t, concat(t, parts), p.W_ws2, p.b_ws2));
}

template <typename T>
Var fuse_head(BasicTape<T>& t, HeadParams& head, Var sim_word, Var sim_sent, Var sim_ws, double dropout_p, bool training,
              Rng& rng) {
  const Var parts[] = {sim_word, sim_sent, sim_ws};
  Var sim = concat(t, parts);
  Var h = sigmoid(t, linear(t, sim, head.W_l1, head.b_l1));
  h = dropout(t, h, dropout_p, training, rng);
  return linear(t, h, head.W_l2, head.b_l2);
}

#define MMAX_INSTANTIATE(T)                                                                              \
  template std::vector<Var> pad_or_truncate(BasicTape<T>&, std::span<const Var>, std::size_t);          \
  template Var word_word_matrix(BasicTape<T>&, std::span<const Var>, std::span<const Var>);              \
  template Var word_word(BasicTape<T>&, ComparisonParams&, std::span<const Var>, std::span<const Var>);  \
  template Var sentence_features(BasicTape<T>&, ComparisonParams&, Var, Var);                            \
  template Var sentence_sentence(BasicTape<T>&, ComparisonParams&, Var, Var);                            \
  template std::pair<Var, Var> word_sentence_matrices(BasicTape<T>&, ComparisonParams&, Var, Var,        \
                                                      std::span<const Var>, std::span<const Var>);       \
  template Var word_sentence(BasicTape<T>&, ComparisonParams&, Var, Var, std::span<const Var>,           \
                             std::span<const Var>);                                                     \
  template Var fuse_head(BasicTape<T>&, HeadParams&, Var, Var, Var, double, bool, Rng&);

MMAX_INSTANTIATE(double)
MMAX_INSTANTIATE(long double)
#undef MMAX_INSTANTIATE

}  // namespace mmax
