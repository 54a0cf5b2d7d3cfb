#include "mmax/encoder.hpp"

#include "mmax/errors.hpp"

namespace mmax {

LstmParams::LstmParams(const std::string& prefix, std::size_t input_dim, std::size_t hidden)
    : W_i(prefix + "W_i", hidden, input_dim),
      W_f(prefix + "W_f", hidden, input_dim),
      W_o(prefix + "W_o", hidden, input_dim),
      W_u(prefix + "W_u", hidden, input_dim),
      U_i(prefix + "U_i", hidden, hidden),
      U_f(prefix + "U_f", hidden, hidden),
      U_o(prefix + "U_o", hidden, hidden),
      U_u(prefix + "U_u", hidden, hidden),
      b_i(prefix + "b_i", hidden, 1),
      b_f(prefix + "b_f", hidden, 1),
      b_o(prefix + "b_o", hidden, 1),
      b_u(prefix + "b_u", hidden, 1) {}

void LstmParams::collect(std::vector<Parameter*>& out) {
  for (Parameter* p : {&W_i, &W_f, &W_o, &W_u, &U_i, &U_f, &U_o, &U_u, &b_i, &b_f, &b_o, &b_u}) out.push_back(p);
}

FilterBank::FilterBank(std::size_t filters, std::size_t input_dim)
    : R("encoder.filters", filters, input_dim), bias("encoder.filter_bias", filters, 1) {}

Projection::Projection(std::size_t dim) : W("encoder.proj_W", dim, dim), b("encoder.proj_b", dim, 1) {}

EncoderParams::EncoderParams(const ModelDims& dims) : kind(dims.encoder), input_dim(dims.total_dim()) {
  switch (kind) {
    case EncoderKind::MaxLstmCnn:
      filters.emplace(dims.filters, input_dim);
      lstm.emplace("encoder.lstm.", dims.filters, dims.lstm_dim);
      break;
    case EncoderKind::MaxCnnOnly:
      filters.emplace(dims.filters, input_dim);
      break;
    case EncoderKind::LstmOnly:
      lstm.emplace("encoder.lstm.", input_dim, dims.lstm_dim);
      break;
    case EncoderKind::ProjectAverage:
      projection.emplace(input_dim);
      break;
    case EncoderKind::WordAverage:
      break;
  }
}

void EncoderParams::collect(std::vector<Parameter*>& out) {
  if (filters) {
    out.push_back(&filters->R);
    out.push_back(&filters->bias);
  }
  if (lstm) lstm->collect(out);
  if (projection) {
    out.push_back(&projection->W);
    out.push_back(&projection->b);
  }
}

template <typename T>
Var multi_aspect(BasicTape<T>& t, FilterBank& bank, Var e_concat) { return sigmoid(t, linear(t, e_concat, bank.R, bank.bias)); }

template <typename T>
Var lstm_final_state(BasicTape<T>& t, LstmParams& p, std::span<const Var> inputs) {
  if (inputs.empty()) throw ShapeError("LSTM over an empty sequence");
  const std::size_t l = p.hidden_dim();
  Var h = t.constant(Vector(l, 0.0));
  Var c = t.constant(Vector(l, 0.0));
  auto gate = [&](Var x, Parameter& W, Parameter& U, Parameter& b) { return add(t, linear(t, x, W, b), matvec(t, h, U)); };
  for (Var x : inputs) {
    Var i = sigmoid(t, gate(x, p.W_i, p.U_i, p.b_i));
    Var f = sigmoid(t, gate(x, p.W_f, p.U_f, p.b_f));
    Var o = sigmoid(t, gate(x, p.W_o, p.U_o, p.b_o));
    Var u = tanh_op(t, gate(x, p.W_u, p.U_u, p.b_u));
    c = add(t, elementwise_mul(t, f, c), elementwise_mul(t, i, u));
    h = elementwise_mul(t, o, tanh_op(t, c));
  }
  return h;
}

template <typename T>
EncodedSentence encode(BasicTape<T>& t, EncoderParams& params, std::span<const Var> rows) {
  if (rows.empty()) throw DataError("cannot encode an empty token sequence");
  EncodedSentence out;
  switch (params.kind) {
    case EncoderKind::MaxLstmCnn:
    case EncoderKind::MaxCnnOnly: {
      for (Var r : rows) out.words.push_back(multi_aspect(t, *params.filters, r));
      Var e_max = max_over_time(t, out.words);
      if (params.kind == EncoderKind::MaxCnnOnly) {
        out.sentence = e_max;
      } else {
        Var e_lstm = lstm_final_state(t, *params.lstm, out.words);
        const Var parts[] = {e_max, e_lstm};
        out.sentence = concat(t, parts);
      }
      break;
    }
    case EncoderKind::LstmOnly:
      out.words.assign(rows.begin(), rows.end());
      out.sentence = lstm_final_state(t, *params.lstm, rows);
      break;
    case EncoderKind::WordAverage:
      out.words.assign(rows.begin(), rows.end());
      out.sentence = mean_rows(t, rows);
      break;
    case EncoderKind::ProjectAverage:
      out.words.assign(rows.begin(), rows.end());
      out.sentence = sigmoid(t, linear(t, mean_rows(t, rows), params.projection->W, params.projection->b));
      break;
  }
  return out;
}

template <typename T>
std::vector<Var> embed_tokens(BasicTape<T>& t, const FusedLexicon& lex, const std::vector<std::string>& tokens) {
  std::vector<Var> rows;
  rows.reserve(tokens.size());
  for (const auto& w : tokens) rows.push_back(t.constant(lex.lookup(w)));
  return rows;
}

#define MMAX_INSTANTIATE(T)                                                                    \
  template Var multi_aspect(BasicTape<T>&, FilterBank&, Var);                                  \
  template Var lstm_final_state(BasicTape<T>&, LstmParams&, std::span<const Var>);             \
  template EncodedSentence encode(BasicTape<T>&, EncoderParams&, std::span<const Var>);        \
  template std::vector<Var> embed_tokens(BasicTape<T>&, const FusedLexicon&, const std::vector<std::string>&);

MMAX_INSTANTIATE(double)
MMAX_INSTANTIATE(long double)
#undef MMAX_INSTANTIATE

Vector multi_aspect(FilterBank& bank, std::span<const double> e_concat) {
  Tape t(false);
  Var x = t.constant(Vector(e_concat.begin(), e_concat.end()));
  Var y = multi_aspect(t, bank, x);
  auto v = t.value(y);
  return {v.begin(), v.end()};
}

SentenceEncoding encode_sentence(EncoderParams& params, const FusedLexicon& lex,
                                 const std::vector<std::string>& tokens) {
  if (params.kind != EncoderKind::MaxLstmCnn) throw std::invalid_argument("encode_sentence needs a MaxLSTM-CNN encoder");
  if (tokens.empty()) throw DataError("cannot encode an empty token sequence");
  Tape t(false);
  auto rows = embed_tokens(t, lex, tokens);
  std::vector<Var> multi;
  for (Var r : rows) multi.push_back(multi_aspect(t, *params.filters, r));
  Var e_max = max_over_time(t, multi);
  Var e_lstm = lstm_final_state(t, *params.lstm, multi);

  SentenceEncoding enc;
  enc.s_multi = Matrix(multi.size(), params.filters->R.value.rows());
  for (std::size_t r = 0; r < multi.size(); ++r) {
    auto v = t.value(multi[r]);
    std::copy(v.begin(), v.end(), enc.s_multi.row(r).begin());
  }
  auto mv = t.value(e_max);
  auto lv = t.value(e_lstm);
  enc.e_max.assign(mv.begin(), mv.end());
  enc.e_lstm.assign(lv.begin(), lv.end());
  enc.e_s = enc.e_max;
  enc.e_s.insert(enc.e_s.end(), enc.e_lstm.begin(), enc.e_lstm.end());
  return enc;
}

Vector encode_baseline(EncoderParams& params, const FusedLexicon& lex, const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw DataError("cannot encode an empty token sequence");
  Tape t(false);
  auto rows = embed_tokens(t, lex, tokens);
  auto enc = encode(t, params, rows);
  auto v = t.value(enc.sentence);
  return {v.begin(), v.end()};
}

}  // namespace mmax
