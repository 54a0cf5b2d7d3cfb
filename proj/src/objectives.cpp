#include "mmax/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mmax/errors.hpp"

namespace mmax {

namespace {

template <typename T>
T log_sum_exp(std::span<const T> x) {
  const T mx = *std::max_element(x.begin(), x.end());
  T s = 0;
  for (T v : x) s += std::exp(v - mx);
  return mx + std::log(s);
}

template <typename T>
T kl_of(const TargetDistribution& target, std::span<const T> logits) {
  require_same_length(target.p.size(), logits.size(), "kl_divergence");
  const T lse = log_sum_exp(logits);
  T loss = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const T p = target.p[i];
    if (p > 0) loss += p * (std::log(p) - (logits[i] - lse));
  }
  return loss;
}

template <typename T>
T ce_of(std::size_t gold, std::span<const T> logits) {
  if (gold >= logits.size()) {
    throw std::out_of_range("gold class " + std::to_string(gold) + " out of range for " +
                            std::to_string(logits.size()) + " classes");
  }
  return log_sum_exp(logits) - logits[gold];
}

template <typename T>
std::vector<T> softmax_of(std::span<const T> x) {
  const T lse = log_sum_exp(x);
  std::vector<T> q(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) q[i] = std::exp(x[i] - lse);
  return q;
}

}  // namespace

ScoreSpec::ScoreSpec(std::size_t k, double lo, double hi) : K(k), raw_min(lo), raw_max(hi) {
  if (K < 2) throw ConfigError("score_k must be at least 2");
  if (!(raw_max > raw_min)) throw ConfigError("raw_max must exceed raw_min");
}

double ScoreSpec::to_mapped(double raw) const {
  return 1.0 + (raw - raw_min) * static_cast<double>(K - 1) / (raw_max - raw_min);
}

double ScoreSpec::to_raw(double mapped) const {
  return raw_min + (mapped - 1.0) * (raw_max - raw_min) / static_cast<double>(K - 1);
}

Vector ScoreSpec::levels() const {
  Vector r(K);
  for (std::size_t i = 0; i < K; ++i) r[i] = static_cast<double>(i + 1);
  return r;
}

TargetDistribution sparse_target(double y, std::size_t K) {
  if (!(y >= 1.0 && y <= static_cast<double>(K))) {
    throw std::domain_error("score " + std::to_string(y) + " outside [1, " + std::to_string(K) + "]");
  }
  TargetDistribution out{Vector(K, 0.0)};
  const double fl = std::floor(y);
  const auto lower = static_cast<std::size_t>(fl);  // 1-based level
  if (lower == K) {
    out.p[K - 1] = 1.0;
    return out;
  }
  out.p[lower - 1] = fl - y + 1.0;
  out.p[lower] = y - fl;
  return out;
}

double kl_divergence(const TargetDistribution& target, std::span<const double> logits) {
  return kl_of(target, logits);
}

template <typename T>
Var kl_loss(BasicTape<T>& t, Var logits, const TargetDistribution& target) {
  const T loss = kl_of(target, t.value(logits));
  return t.push({loss}, t.needs_grad(logits), [logits, p = target.p](BasicTape<T>& tp, std::span<const T> g) {
    const auto q = softmax_of(tp.value(logits));
    auto gl = tp.grad(logits);
    for (std::size_t i = 0; i < q.size(); ++i) gl[i] += g[0] * (q[i] - p[i]);
  });
}

double expected_level(std::span<const double> logits) {
  const Vector q = softmax_value(logits);
  double y = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) y += static_cast<double>(i + 1) * q[i];
  return y;
}

double decode_score(std::span<const double> logits, const ScoreSpec& spec) {
  require_same_length(logits.size(), spec.K, "decode_score");
  return spec.to_raw(expected_level(logits));
}

double cross_entropy(std::size_t gold, std::span<const double> logits) { return ce_of(gold, logits); }

template <typename T>
Var ce_loss(BasicTape<T>& t, Var logits, std::size_t gold) {
  const T loss = ce_of(gold, t.value(logits));
  return t.push({loss}, t.needs_grad(logits), [logits, gold](BasicTape<T>& tp, std::span<const T> g) {
    const auto q = softmax_of(tp.value(logits));
    auto gl = tp.grad(logits);
    for (std::size_t i = 0; i < q.size(); ++i) gl[i] += g[0] * (q[i] - (i == gold ? 1.0 : 0.0));
  });
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

template Var kl_loss(Tape&, Var, const TargetDistribution&);
template Var kl_loss(ExtendedTape&, Var, const TargetDistribution&);
template Var ce_loss(Tape&, Var, std::size_t);
template Var ce_loss(ExtendedTape&, Var, std::size_t);

}  // namespace mmax
