#include "mmax/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmax/errors.hpp"

namespace mmax {

namespace {

// Keeps sigmoid strictly inside (0, 1) even when exp() saturates.
template <typename T>
T sigmoid_of(T x) {
  constexpr T lo = std::numeric_limits<T>::min();
  constexpr T hi = T(1) - std::numeric_limits<T>::epsilon() / 2;
  return std::clamp(T(1) / (T(1) + std::exp(-x)), lo, hi);
}

template <typename T>
std::vector<T> softmax_of(std::span<const T> x) {
  if (x.empty()) throw ShapeError("softmax of an empty vector");
  const T mx = *std::max_element(x.begin(), x.end());
  std::vector<T> y(x.size());
  T sum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - mx);
    sum += y[i];
  }
  for (T& v : y) v /= sum;
  return y;
}

template <typename T>
T cosine_of(std::span<const T> a, std::span<const T> b) {
  require_same_length(a.size(), b.size(), "cosine");
  T dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (na < kCosineNormFloor || nb < kCosineNormFloor) return 0;
  return dot / (na * nb);
}

// Four independent partial sums break the add latency chain; this loop
// dominates the forward pass.
template <typename T>
T dot(std::span<const double> w, std::span<const T> x) {
  const std::size_t n = w.size();
  T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    s0 += w[j] * x[j];
    s1 += w[j + 1] * x[j + 1];
    s2 += w[j + 2] * x[j + 2];
    s3 += w[j + 3] * x[j + 3];
  }
  for (; j < n; ++j) s0 += w[j] * x[j];
  return (s0 + s1) + (s2 + s3);
}

void require_shape(const Parameter& W, std::size_t rows, std::size_t cols, const char* op) {
  if (W.value.rows() != rows || W.value.cols() != cols) {
    throw ShapeError(std::string(op) + ": parameter " + W.name + " is " + W.value.shape() +
                     ", input needs " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

template <typename T>
Var BasicTape<T>::constant(Values value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}});
  return Var{nodes_.size() - 1};
}

template <typename T>
Var BasicTape<T>::constant(std::span<const double> value) {
  return constant(Values(value.begin(), value.end()));
}

template <typename T>
Var BasicTape<T>::push(Values value, bool needs_grad, Backward backward) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  if (record_ && needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

template <typename T>
T BasicTape<T>::scalar(Var v) const {
  const auto& val = nodes_[v.id].value;
  if (val.size() != 1) throw ShapeError("Tape::scalar on a node of length " + std::to_string(val.size()));
  return val[0];
}

template <typename T>
std::span<T> BasicTape<T>::grad(Var v) {
  auto& node = nodes_[v.id];
  if (node.grad.size() != node.value.size()) node.grad.assign(node.value.size(), T(0));
  return node.grad;
}

template <typename T>
void BasicTape<T>::backward(Var root) {
  if (!record_) throw std::logic_error("backward() on a tape built without recording");
  if (size(root) != 1) throw ShapeError("backward() root must be a scalar");
  grad(root)[0] += T(1);
  for (std::size_t i = root.id + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (!node.backward || node.grad.empty()) continue;
    node.backward(*this, node.grad);
  }
}

// ---- primitives -----------------------------------------------------------

template <typename T>
Var linear(BasicTape<T>& t, Var x, Parameter& W, Parameter& b) {
  const std::size_t n = t.size(x);
  const std::size_t m = W.value.rows();
  require_shape(W, m, n, "linear");
  require_shape(b, m, 1, "linear bias");
  auto xv = t.value(x);
  std::vector<T> y(m);
  for (std::size_t i = 0; i < m; ++i) {
    y[i] = b.value(i, 0) + dot<T>(W.value.row(i), xv);
  }
  return t.push(std::move(y), true, [x, &W, &b](BasicTape<T>& tp, std::span<const T> g) {
    auto xv = tp.value(x);
    const std::size_t n = xv.size();
    for (std::size_t i = 0; i < g.size(); ++i) {
      b.grad(i, 0) += g[i];
      auto grow = W.grad.row(i);
      for (std::size_t j = 0; j < n; ++j) grow[j] += g[i] * xv[j];
    }
    if (tp.needs_grad(x)) {
      auto gx = tp.grad(x);
      for (std::size_t i = 0; i < g.size(); ++i) {
        auto row = W.value.row(i);
        for (std::size_t j = 0; j < n; ++j) gx[j] += row[j] * g[i];
      }
    }
  });
}

template <typename T>
Var matvec(BasicTape<T>& t, Var x, Parameter& W) {
  const std::size_t n = t.size(x);
  const std::size_t m = W.value.rows();
  require_shape(W, m, n, "matvec");
  auto xv = t.value(x);
  std::vector<T> y(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    y[i] = dot<T>(W.value.row(i), xv);
  }
  return t.push(std::move(y), true, [x, &W](BasicTape<T>& tp, std::span<const T> g) {
    auto xv = tp.value(x);
    const std::size_t n = xv.size();
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto grow = W.grad.row(i);
      for (std::size_t j = 0; j < n; ++j) grow[j] += g[i] * xv[j];
    }
    if (tp.needs_grad(x)) {
      auto gx = tp.grad(x);
      for (std::size_t i = 0; i < g.size(); ++i) {
        auto row = W.value.row(i);
        for (std::size_t j = 0; j < n; ++j) gx[j] += row[j] * g[i];
      }
    }
  });
}

template <typename T>
Var add(BasicTape<T>& t, Var a, Var b) {
  require_same_length(t.size(a), t.size(b), "add");
  auto av = t.value(a);
  auto bv = t.value(b);
  std::vector<T> y(av.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[i];
  return t.push(std::move(y), t.needs_grad(a) || t.needs_grad(b),
                [a, b](BasicTape<T>& tp, std::span<const T> g) {
                  for (Var v : {a, b}) {
                    if (!tp.needs_grad(v)) continue;
                    auto gv = tp.grad(v);
                    for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
                  }
                });
}


template <typename T>
Var sigmoid(BasicTape<T>& t, Var x) {
  auto xv = t.value(x);
  std::vector<T> y(xv.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = sigmoid_of<T>(xv[i]);
  const std::size_t self = t.node_count();
  return t.push(std::move(y), t.needs_grad(x), [x, self](BasicTape<T>& tp, std::span<const T> g) {
    auto yv = tp.value(Var{self});
    auto gx = tp.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * yv[i] * (1.0 - yv[i]);
  });
}

template <typename T>
Var tanh_op(BasicTape<T>& t, Var x) {
  auto xv = t.value(x);
  std::vector<T> y(xv.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(xv[i]);
  const std::size_t self = t.node_count();
  return t.push(std::move(y), t.needs_grad(x), [x, self](BasicTape<T>& tp, std::span<const T> g) {
    auto yv = tp.value(Var{self});
    auto gx = tp.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - yv[i] * yv[i]);
  });
}


template <typename T>
Var softmax(BasicTape<T>& t, Var x) {
  std::vector<T> y = softmax_of<T>(t.value(x));
  const std::size_t self = t.node_count();
  return t.push(std::move(y), t.needs_grad(x), [x, self](BasicTape<T>& tp, std::span<const T> g) {
    auto yv = tp.value(Var{self});
    T dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * yv[i];
    auto gx = tp.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += yv[i] * (g[i] - dot);
  });
}

template <typename T>
Var elementwise_mul(BasicTape<T>& t, Var a, Var b) {
  require_same_length(t.size(a), t.size(b), "elementwise_mul");
  auto av = t.value(a);
  auto bv = t.value(b);
  std::vector<T> y(av.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
  return t.push(std::move(y), t.needs_grad(a) || t.needs_grad(b),
                [a, b](BasicTape<T>& tp, std::span<const T> g) {
                  auto av = tp.value(a);
                  auto bv = tp.value(b);
                  if (tp.needs_grad(a)) {
                    auto ga = tp.grad(a);
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
                  }
                  if (tp.needs_grad(b)) {
                    auto gb = tp.grad(b);
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
                  }
                });
}

template <typename T>
Var abs_diff(BasicTape<T>& t, Var a, Var b) {
  require_same_length(t.size(a), t.size(b), "abs_diff");
  auto av = t.value(a);
  auto bv = t.value(b);
  std::vector<T> y(av.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::abs(av[i] - bv[i]);
  return t.push(std::move(y), t.needs_grad(a) || t.needs_grad(b),
                [a, b](BasicTape<T>& tp, std::span<const T> g) {
                  auto av = tp.value(a);
                  auto bv = tp.value(b);
                  std::vector<T> s(g.size());
                  for (std::size_t i = 0; i < g.size(); ++i) {
                    const T d = av[i] - bv[i];
                    s[i] = d > 0.0 ? g[i] : (d < 0.0 ? -g[i] : 0.0);
                  }
                  if (tp.needs_grad(a)) {
                    auto ga = tp.grad(a);
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s[i];
                  }
                  if (tp.needs_grad(b)) {
                    auto gb = tp.grad(b);
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= s[i];
                  }
                });
}

template <typename T>
Var concat(BasicTape<T>& t, std::span<const Var> parts) {
  std::vector<T> y;
  bool needs = false;
  for (Var p : parts) {
    auto pv = t.value(p);
    y.insert(y.end(), pv.begin(), pv.end());
    needs = needs || t.needs_grad(p);
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return t.push(std::move(y), needs, [saved = std::move(saved)](BasicTape<T>& tp, std::span<const T> g) {
    std::size_t offset = 0;
    for (Var p : saved) {
      const std::size_t n = tp.size(p);
      if (tp.needs_grad(p)) {
        auto gp = tp.grad(p);
        for (std::size_t i = 0; i < n; ++i) gp[i] += g[offset + i];
      }
      offset += n;
    }
  });
}


template <typename T>
Var cosine(BasicTape<T>& t, Var a, Var b) {
  require_same_length(t.size(a), t.size(b), "cosine");
  const T c = cosine_of<T>(t.value(a), t.value(b));
  return t.push({c}, t.needs_grad(a) || t.needs_grad(b), [a, b, c](BasicTape<T>& tp, std::span<const T> g) {
    auto av = tp.value(a);
    auto bv = tp.value(b);
    T na = 0, nb = 0;
    for (std::size_t i = 0; i < av.size(); ++i) {
      na += av[i] * av[i];
      nb += bv[i] * bv[i];
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na < kCosineNormFloor || nb < kCosineNormFloor) return;
    const T inv = T(1) / (na * nb);
    if (tp.needs_grad(a)) {
      auto ga = tp.grad(a);
      for (std::size_t i = 0; i < av.size(); ++i) ga[i] += g[0] * (bv[i] * inv - c * av[i] / (na * na));
    }
    if (tp.needs_grad(b)) {
      auto gb = tp.grad(b);
      for (std::size_t i = 0; i < av.size(); ++i) gb[i] += g[0] * (av[i] * inv - c * bv[i] / (nb * nb));
    }
  });
}

template <typename T>
Var max_over_time(BasicTape<T>& t, std::span<const Var> rows) {
  if (rows.empty()) throw ShapeError("max_over_time over an empty sequence");
  const std::size_t width = t.size(rows[0]);
  std::vector<T> y(t.value(rows[0]).begin(), t.value(rows[0]).end());
  std::vector<std::size_t> winner(width, 0);
  bool needs = t.needs_grad(rows[0]);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    require_same_length(t.size(rows[r]), width, "max_over_time");
    auto rv = t.value(rows[r]);
    for (std::size_t i = 0; i < width; ++i) {
      if (rv[i] > y[i]) {
        y[i] = rv[i];
        winner[i] = r;
      }
    }
    needs = needs || t.needs_grad(rows[r]);
  }
  std::vector<Var> saved(rows.begin(), rows.end());
  return t.push(std::move(y), needs,
                [saved = std::move(saved), winner = std::move(winner)](BasicTape<T>& tp, std::span<const T> g) {
                  for (std::size_t i = 0; i < g.size(); ++i) {
                    Var src = saved[winner[i]];
                    if (tp.needs_grad(src)) tp.grad(src)[i] += g[i];
                  }
                });
}

template <typename T>
Var mean_rows(BasicTape<T>& t, std::span<const Var> rows) {
  if (rows.empty()) throw ShapeError("mean over an empty sequence");
  const std::size_t width = t.size(rows[0]);
  std::vector<T> y(width, 0.0);
  bool needs = false;
  for (Var r : rows) {
    require_same_length(t.size(r), width, "mean_rows");
    auto rv = t.value(r);
    for (std::size_t i = 0; i < width; ++i) y[i] += rv[i];
    needs = needs || t.needs_grad(r);
  }
  const T inv = T(1) / static_cast<T>(rows.size());
  for (T& v : y) v *= inv;
  std::vector<Var> saved(rows.begin(), rows.end());
  return t.push(std::move(y), needs, [saved = std::move(saved), inv](BasicTape<T>& tp, std::span<const T> g) {
    for (Var r : saved) {
      if (!tp.needs_grad(r)) continue;
      auto gr = tp.grad(r);
      for (std::size_t i = 0; i < g.size(); ++i) gr[i] += g[i] * inv;
    }
  });
}

template <typename T>
Var dropout(BasicTape<T>& t, Var x, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout probability must lie in [0, 1), got " + std::to_string(p));
  if (!training || p == 0.0) return x;
  const double scale = 1.0 / (1.0 - p);
  auto xv = t.value(x);
  std::vector<double> mask(xv.size());
  std::vector<T> y(xv.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    mask[i] = rng.uniform() < p ? 0.0 : scale;
    y[i] = xv[i] * mask[i];
  }
  return t.push(std::move(y), t.needs_grad(x), [x, mask = std::move(mask)](BasicTape<T>& tp, std::span<const T> g) {
    auto gx = tp.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
  });
}

double sigmoid_value(double x) { return sigmoid_of<double>(x); }

Vector softmax_value(std::span<const double> x) { return softmax_of<double>(x); }

double cosine_value(std::span<const double> a, std::span<const double> b) { return cosine_of<double>(a, b); }

#define MMAX_INSTANTIATE(T)                                                     \
  template class BasicTape<T>;                                                  \
  template Var linear(BasicTape<T>&, Var, Parameter&, Parameter&);              \
  template Var matvec(BasicTape<T>&, Var, Parameter&);                          \
  template Var add(BasicTape<T>&, Var, Var);                                    \
  template Var sigmoid(BasicTape<T>&, Var);                                     \
  template Var tanh_op(BasicTape<T>&, Var);                                     \
  template Var softmax(BasicTape<T>&, Var);                                     \
  template Var elementwise_mul(BasicTape<T>&, Var, Var);                        \
  template Var abs_diff(BasicTape<T>&, Var, Var);                               \
  template Var concat(BasicTape<T>&, std::span<const Var>);                     \
  template Var cosine(BasicTape<T>&, Var, Var);                                 \
  template Var max_over_time(BasicTape<T>&, std::span<const Var>);              \
  template Var mean_rows(BasicTape<T>&, std::span<const Var>);                  \
  template Var dropout(BasicTape<T>&, Var, double, bool, Rng&);

MMAX_INSTANTIATE(double)
MMAX_INSTANTIATE(long double)

}  // namespace mmax
