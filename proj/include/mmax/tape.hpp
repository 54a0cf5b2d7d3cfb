#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mmax/matrix.hpp"
#include "mmax/rng.hpp"

namespace mmax {

// A trainable tensor with its gradient buffer. Shapes of value and grad match.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, std::size_t rows, std::size_t cols)
      : name(std::move(n)), value(rows, cols), grad(rows, cols) {}

  void zero_grad() { grad.fill(0.0); }
};

// Handle to a vector-valued node recorded on a tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

// Reverse-mode tape. Each primitive pushes a node holding its value and a
// closure that, given the node's output gradient, accumulates into its
// parents (other nodes or Parameter::grad). backward() replays closures in
// exact reverse order of execution.
//
// A tape built with record = false only computes values; inference uses it.
// T is the arithmetic type of node values. Training and the analytic
// gradient use double; the finite-difference oracle re-runs the forward
// pass with long double. Parameters are always stored as double.
template <typename T>
class BasicTape {
 public:
  using Scalar = T;
  using Values = std::vector<T>;
  using Backward = std::function<void(BasicTape&, std::span<const T> out_grad)>;

  explicit BasicTape(bool record = true) : record_(record) { nodes_.reserve(512); }

  bool recording() const { return record_; }

  // Leaf that never receives gradient (embedding vectors, padding rows).
  Var constant(Values value);
  Var constant(std::span<const double> value);
  // Node produced by a primitive; needs_grad marks whether anything upstream is trainable.
  Var push(Values value, bool needs_grad, Backward backward);

  std::span<const T> value(Var v) const { return nodes_[v.id].value; }
  std::size_t size(Var v) const { return nodes_[v.id].value.size(); }
  T scalar(Var v) const;
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

  // Gradient accumulator of a node; allocated on first use.
  std::span<T> grad(Var v);

  // Seeds d(root)/d(root) = 1 for a scalar root and runs every closure.
  void backward(Var root);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Values value;
    Values grad;
    bool needs_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
  bool record_;
};

using Tape = BasicTape<double>;
using ExtendedTape = BasicTape<long double>;

// ---- primitives -----------------------------------------------------------
// All take and return tape vars; shape mismatches throw ShapeError.

// W x + b
template <typename T> Var linear(BasicTape<T>& t, Var x, Parameter& W, Parameter& b);
// W x (no bias)
template <typename T> Var matvec(BasicTape<T>& t, Var x, Parameter& W);
template <typename T> Var add(BasicTape<T>& t, Var a, Var b);
template <typename T> Var sigmoid(BasicTape<T>& t, Var x);
template <typename T> Var tanh_op(BasicTape<T>& t, Var x);
template <typename T> Var softmax(BasicTape<T>& t, Var x);
template <typename T> Var elementwise_mul(BasicTape<T>& t, Var a, Var b);
// |a - b|, subgradient 0 at exact ties
template <typename T> Var abs_diff(BasicTape<T>& t, Var a, Var b);
template <typename T> Var concat(BasicTape<T>& t, std::span<const Var> parts);
// Cosine similarity as a length-1 vector; 0 with zero gradient when either norm < 1e-12.
template <typename T> Var cosine(BasicTape<T>& t, Var a, Var b);
// Per-column max over rows; ties go to the lowest row index.
template <typename T> Var max_over_time(BasicTape<T>& t, std::span<const Var> rows);
template <typename T> Var mean_rows(BasicTape<T>& t, std::span<const Var> rows);
// Inverted dropout: training zeroes entries with probability p and scales survivors by 1/(1-p).
template <typename T> Var dropout(BasicTape<T>& t, Var x, double p, bool training, Rng& rng);

// ---- plain value helpers (no tape) -----------------------------------------

double sigmoid_value(double x);
Vector softmax_value(std::span<const double> x);
double cosine_value(std::span<const double> a, std::span<const double> b);

constexpr double kCosineNormFloor = 1e-12;

}  // namespace mmax
