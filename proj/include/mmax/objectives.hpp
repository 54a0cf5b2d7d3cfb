#pragma once

#include <cstddef>
#include <span>

#include "mmax/matrix.hpp"
#include "mmax/tape.hpp"

namespace mmax {

// Score levels r = [1..K] and the affine map from a dataset's native range onto [1, K].
struct ScoreSpec {
  std::size_t K = 6;
  double raw_min = 0.0;
  double raw_max = 5.0;

  ScoreSpec() = default;
  ScoreSpec(std::size_t k, double lo, double hi);  // throws ConfigError

  double to_mapped(double raw) const;
  double to_raw(double mapped) const;
  Vector levels() const;
};

// Distribution over score levels 1..K; index 0 is level 1.
struct TargetDistribution {
  Vector p;
};

// Two adjacent masses with r . p = y. Throws std::domain_error outside [1, K].
TargetDistribution sparse_target(double y, std::size_t K);

// KL(p || softmax(logits)) with 0 ln 0 = 0.
double kl_divergence(const TargetDistribution& target, std::span<const double> logits);
template <typename T>
Var kl_loss(BasicTape<T>& t, Var logits, const TargetDistribution& target);

// r . softmax(logits), mapped back to the raw range.
double decode_score(std::span<const double> logits, const ScoreSpec& spec);
// r . softmax(logits) on [1, K].
double expected_level(std::span<const double> logits);

// -ln softmax(logits)[gold]. Throws std::out_of_range for a bad gold index.
double cross_entropy(std::size_t gold, std::span<const double> logits);
template <typename T>
Var ce_loss(BasicTape<T>& t, Var logits, std::size_t gold);

std::size_t argmax(std::span<const double> v);

}  // namespace mmax
