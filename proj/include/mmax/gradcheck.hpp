#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mmax/tape.hpp"

namespace mmax {

struct GradCheckEntry {
  std::string name;
  std::size_t entries = 0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> params;
  double max_rel_error = 0.0;

  bool passed(double tolerance) const { return max_rel_error < tolerance; }
  // Names of parameters whose error reaches the tolerance.
  std::vector<std::string> failing(double tolerance) const;
};

// Loss callback. With with_grad = true it must leave the analytic gradient in
// each Parameter::grad (the checker zeroes them first); otherwise it only
// evaluates the loss. The return type is long double so a callback can
// evaluate the perturbed losses above f64 precision; a double-valued
// callback works unchanged.
using LossFn = std::function<long double(bool with_grad)>;

double relative_error(double analytic, double numeric);

// Central differences (f(θ+h) - f(θ-h)) / 2h for every entry of every
// parameter, compared with the analytic gradient. Parameter values are
// restored bit-exactly afterwards.
GradCheckReport grad_check(const LossFn& loss, std::span<Parameter* const> params, double h = 1e-5);

}  // namespace mmax
