#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mmax/errors.hpp"
#include "mmax/gradcheck.hpp"
#include "mmax/tape.hpp"
#include "support.hpp"

using namespace mmax;
using namespace mmax::test;

namespace {

Vector values(Tape& t, Var v) {
  auto s = t.value(v);
  return {s.begin(), s.end()};
}

Parameter matrix_param(const std::string& name, const Matrix& m) {
  Parameter p(name, m.rows(), m.cols());
  p.value = m;
  return p;
}

// Scalar loss sum_i w_i * y_i over a primitive's output, so every output
// coordinate gets a distinct upstream gradient.
Var weighted_sum(Tape& t, Var y, const Vector& w) {
  Var wv = t.constant(w);
  Var prod = elementwise_mul(t, y, wv);
  auto pv = t.value(prod);
  const double s = std::accumulate(pv.begin(), pv.end(), 0.0);
  return t.push({s}, t.needs_grad(prod), [prod](Tape& tp, std::span<const double> g) {
    auto gp = tp.grad(prod);
    for (double& x : gp) x += g[0];
  });
}

// Runs grad_check on loss(params) where `build` maps leaf vars to the primitive output.
template <typename Build>
double primitive_error(std::vector<Parameter>& inputs, std::size_t out_dim, Rng& rng, Build build) {
  const Vector w = random_vector(rng, out_dim);
  std::vector<Parameter*> ptrs;
  for (auto& p : inputs) ptrs.push_back(&p);
  const LossFn loss = [&](bool with_grad) -> long double {
    Tape t(with_grad);
    std::vector<Var> leaves;
    for (auto& p : inputs) leaves.push_back(leaf(t, p));
    Var y = build(t, leaves);
    Var l = weighted_sum(t, y, w);
    if (with_grad) t.backward(l);
    return t.scalar(l);
  };
  return grad_check(loss, ptrs).max_rel_error;
}

}  // namespace

TEST_CASE("linear: identity, zero weights and a hand-computed case") {
  Tape t;
  Parameter W = matrix_param("W", Matrix::identity(2));
  Parameter b("b", 2, 1);
  CHECK(values(t, linear(t, t.constant(Vector{3, -1}), W, b)) == Vector{3, -1});

  Parameter Z("Z", 2, 2);
  Parameter b12 = vector_param("b", {1, 2});
  CHECK(values(t, linear(t, t.constant(Vector{7.5, -123.0}), Z, b12)) == Vector{1, 2});

  Parameter W2 = matrix_param("W", Matrix::from_rows({{1, 2}, {3, 4}}));
  CHECK(values(t, linear(t, t.constant(Vector{1, 1}), W2, b)) == Vector{3, 7});
}

TEST_CASE("linear: shape mismatch names both shapes") {
  Tape t;
  Parameter W("enc.W", 2, 3);
  Parameter b("enc.b", 2, 1);
  try {
    linear(t, t.constant(Vector{1, 2}), W, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("2x2") != std::string::npos);
  }
}

TEST_CASE("sigmoid and tanh fixed points and saturation") {
  Tape t;
  CHECK(values(t, sigmoid(t, t.constant(Vector{0.0})))[0] == 0.5);
  CHECK(values(t, tanh_op(t, t.constant(Vector{0.0})))[0] == 0.0);
  const double lo = values(t, sigmoid(t, t.constant(Vector{-1e6})))[0];
  CHECK(lo > 0.0);
  CHECK(lo <= 1e-300);
  const double hi = values(t, sigmoid(t, t.constant(Vector{1e6})))[0];
  CHECK(hi < 1.0);
  CHECK(std::isfinite(hi));
}

TEST_CASE("softmax examples") {
  Tape t;
  CHECK(values(t, softmax(t, t.constant(Vector{0, 0}))) == Vector{0.5, 0.5});
  for (double c : {-50.0, 0.0, 3.7, 800.0}) {
    for (double p : values(t, softmax(t, t.constant(Vector{c, c, c})))) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-15));
  }
  const Vector big = values(t, softmax(t, t.constant(Vector{1000, 0})));
  CHECK(std::isfinite(big[0]));
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(big[1] >= 0.0);
  CHECK(big[1] < 1e-300);
}

TEST_CASE("softmax property: sums to one and ignores a common shift") {
  Rng rng = Rng::stream(11, "test");
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.below(9);
    Vector x = random_vector(rng, n, -20, 20);
    const double shift = rng.uniform(-100, 100);
    Vector xs = x;
    for (double& v : xs) v += shift;
    const Vector p = softmax_value(x);
    const Vector q = softmax_value(xs);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(p[i] >= 0.0);
      CHECK(std::abs(p[i] - q[i]) <= 1e-12);
      sum += p[i];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("elementwise ops and concat") {
  Tape t;
  CHECK(values(t, elementwise_mul(t, t.constant(Vector{1, 2}), t.constant(Vector{3, 4}))) == Vector{3, 8});
  CHECK(values(t, abs_diff(t, t.constant(Vector{1, -2}), t.constant(Vector{3, 1}))) == Vector{2, 3});
  const Var parts[] = {t.constant(Vector{1}), t.constant(Vector{2, 3})};
  CHECK(values(t, concat(t, parts)) == Vector{1, 2, 3});
  CHECK_THROWS_AS(elementwise_mul(t, t.constant(Vector{1}), t.constant(Vector{1, 2})), ShapeError);
  CHECK_THROWS_AS(abs_diff(t, t.constant(Vector{1, 2, 3}), t.constant(Vector{1, 2})), ShapeError);
}

TEST_CASE("abs_diff has zero subgradient at an exact tie") {
  Tape t;
  Parameter a = vector_param("a", {2.0, 5.0});
  Parameter b = vector_param("b", {2.0, 1.0});
  Var y = abs_diff(t, leaf(t, a), leaf(t, b));
  Var l = weighted_sum(t, y, {1.0, 1.0});
  t.backward(l);
  CHECK(a.grad(0, 0) == 0.0);
  CHECK(b.grad(0, 0) == 0.0);
  CHECK(a.grad(1, 0) == 1.0);
  CHECK(b.grad(1, 0) == -1.0);
}

TEST_CASE("cosine examples and zero-norm guard") {
  Tape t;
  const Vector v{0.3, -2.0, 5.0};
  CHECK(values(t, cosine(t, t.constant(v), t.constant(v)))[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(values(t, cosine(t, t.constant(Vector{1, 0}), t.constant(Vector{0, 1})))[0] == 0.0);
  CHECK(values(t, cosine(t, t.constant(Vector{0, 0}), t.constant(Vector{1, 1})))[0] == 0.0);

  Parameter z = vector_param("z", {0.0, 0.0});
  Parameter o = vector_param("o", {1.0, 1.0});
  Var c = cosine(t, leaf(t, z), leaf(t, o));
  t.backward(c);
  CHECK(z.grad(0, 0) == 0.0);
  CHECK(z.grad(1, 0) == 0.0);
  CHECK(o.grad(0, 0) == 0.0);
}

TEST_CASE("cosine property: invariant to positive rescaling") {
  Rng rng = Rng::stream(12, "test");
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    const Vector a = random_vector(rng, n);
    const Vector b = random_vector(rng, n);
    const double alpha = std::exp(rng.uniform(-5, 5));
    const double beta = std::exp(rng.uniform(-5, 5));
    Vector as = a, bs = b;
    for (double& x : as) x *= alpha;
    for (double& x : bs) x *= beta;
    CHECK(std::abs(cosine_value(a, b) - cosine_value(as, bs)) <= 1e-12);
  }
}

TEST_CASE("max_over_time examples and tie routing") {
  Tape t;
  const Var rows[] = {t.constant(Vector{1, 3}), t.constant(Vector{2, 0})};
  CHECK(values(t, max_over_time(t, rows)) == Vector{2, 3});
  const Var one[] = {t.constant(Vector{4, -1, 7})};
  CHECK(values(t, max_over_time(t, one)) == Vector{4, -1, 7});
  CHECK_THROWS_AS(max_over_time(t, std::span<const Var>{}), ShapeError);

  Parameter r0 = vector_param("r0", {5, 5});
  Parameter r1 = vector_param("r1", {5, 5});
  const Var tied[] = {leaf(t, r0), leaf(t, r1)};
  Var m = max_over_time(t, tied);
  CHECK(values(t, m) == Vector{5, 5});
  t.backward(weighted_sum(t, m, {1.0, 2.0}));
  CHECK(r0.grad(0, 0) == 1.0);
  CHECK(r0.grad(1, 0) == 2.0);
  CHECK(r1.grad(0, 0) == 0.0);
  CHECK(r1.grad(1, 0) == 0.0);
}

TEST_CASE("max_over_time property: row permutations do not change the result") {
  Rng rng = Rng::stream(13, "test");
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(7);
    const std::size_t h = 1 + rng.below(6);
    std::vector<Vector> rows;
    for (std::size_t i = 0; i < n; ++i) rows.push_back(random_vector(rng, h));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);

    Tape t(false);
    std::vector<Var> a, b;
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back(t.constant(rows[i]));
      b.push_back(t.constant(rows[perm[i]]));
    }
    CHECK(values(t, max_over_time(t, a)) == values(t, max_over_time(t, b)));
  }
}

TEST_CASE("dropout modes") {
  Tape t;
  Rng rng = Rng::stream(5, "dropout");
  const Vector x{1.5, -2.0, 3.25, 0.5};
  Var xv = t.constant(x);
  CHECK(values(t, dropout(t, xv, 0.5, false, rng)) == x);
  CHECK(values(t, dropout(t, xv, 0.0, true, rng)) == x);
  CHECK_THROWS_AS(dropout(t, xv, 1.0, true, rng), ConfigError);
  CHECK_THROWS_AS(dropout(t, xv, -0.1, true, rng), ConfigError);

  Rng r1 = Rng::stream(99, "dropout");
  Rng r2 = Rng::stream(99, "dropout");
  Var ones = t.constant(Vector{1, 1, 1, 1});
  const Vector m1 = values(t, dropout(t, ones, 0.5, true, r1));
  const Vector m2 = values(t, dropout(t, ones, 0.5, true, r2));
  CHECK(m1 == m2);
  for (double v : m1) CHECK((v == 0.0 || v == 2.0));
}

TEST_CASE("dropout keeps the expected value under inverted scaling") {
  Tape t(false);
  Rng rng = Rng::stream(17, "dropout");
  Var ones = t.constant(Vector(20000, 1.0));
  const Vector y = values(t, dropout(t, ones, 0.3, true, rng));
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("grad_check examples") {
  Parameter theta = vector_param("theta", {3.0});
  std::vector<Parameter*> ps{&theta};
  const LossFn square = [&](bool with_grad) -> long double {
    const double v = theta.value(0, 0);
    if (with_grad) theta.grad(0, 0) += 2.0 * v;
    return v * v;
  };
  const GradCheckReport r = grad_check(square, ps, 1e-5);
  CHECK(r.max_rel_error < 1e-9);
  CHECK(theta.value(0, 0) == 3.0);
  CHECK(theta.grad(0, 0) == 6.0);

  Parameter c = vector_param("c", {1.0, -2.0, 0.5});
  std::vector<Parameter*> cs{&c};
  const LossFn constant = [](bool) -> long double { return 4.25; };
  const GradCheckReport rc = grad_check(constant, cs, 1e-5);
  CHECK(rc.max_rel_error == 0.0);
  for (double g : c.grad.data()) CHECK(g == 0.0);
}

TEST_CASE("grad_check flags a wrong analytic gradient and names the parameter") {
  Parameter good = vector_param("good", {0.7});
  Parameter bad = vector_param("bad", {-1.3});
  std::vector<Parameter*> ps{&good, &bad};
  const LossFn f = [&](bool with_grad) -> long double {
    const double a = good.value(0, 0), b = bad.value(0, 0);
    if (with_grad) {
      good.grad(0, 0) += std::cos(a);
      bad.grad(0, 0) += 3.0 * b * b * 1.01;
    }
    return std::sin(a) + b * b * b;
  };
  const GradCheckReport r = grad_check(f, ps);
  CHECK_FALSE(r.passed(1e-4));
  CHECK(r.failing(1e-4) == std::vector<std::string>{"bad"});
}

TEST_CASE("backward of every primitive matches central differences") {
  Rng rng = Rng::stream(21, "test");
  constexpr double kTol = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.below(5);
    const std::size_t m = 1 + rng.below(4);
    auto vec = [&](const char* name, std::size_t k) { return vector_param(name, random_vector(rng, k)); };

    {
      Parameter W("W", m, n), b("b", m, 1);
      randomize(W, rng);
      randomize(b, rng);
      std::vector<Parameter> in{vec("x", n)};
      CHECK(primitive_error(in, m, rng, [&](Tape& t, std::vector<Var>& v) { return linear(t, v[0], W, b); }) < kTol);
      std::vector<Parameter*> wb{&W, &b};
      const Vector x = random_vector(rng, n);
      const Vector w = random_vector(rng, m);
      const LossFn lw = [&](bool g) -> long double {
        Tape t(g);
        Var l = weighted_sum(t, linear(t, t.constant(x), W, b), w);
        if (g) t.backward(l);
        return t.scalar(l);
      };
      CHECK(grad_check(lw, wb).max_rel_error < kTol);
      std::vector<Parameter*> wonly{&W};
      const LossFn lm = [&](bool g) -> long double {
        Tape t(g);
        Var l = weighted_sum(t, matvec(t, t.constant(x), W), w);
        if (g) t.backward(l);
        return t.scalar(l);
      };
      CHECK(grad_check(lm, wonly).max_rel_error < kTol);
    }
    std::vector<Parameter> one{vec("x", n)};
    CHECK(primitive_error(one, n, rng, [](Tape& t, std::vector<Var>& v) { return sigmoid(t, v[0]); }) < kTol);
    CHECK(primitive_error(one, n, rng, [](Tape& t, std::vector<Var>& v) { return tanh_op(t, v[0]); }) < kTol);
    CHECK(primitive_error(one, n, rng, [](Tape& t, std::vector<Var>& v) { return softmax(t, v[0]); }) < kTol);

    std::vector<Parameter> two{vec("a", n), vec("b", n)};
    CHECK(primitive_error(two, n, rng, [](Tape& t, std::vector<Var>& v) { return add(t, v[0], v[1]); }) < kTol);
    CHECK(primitive_error(two, n, rng, [](Tape& t, std::vector<Var>& v) { return elementwise_mul(t, v[0], v[1]); }) <
          kTol);
    bool separated = true;
    for (std::size_t i = 0; i < n; ++i) separated = separated && std::abs(two[0].value(i, 0) - two[1].value(i, 0)) > 1e-4;
    if (separated) {
      CHECK(primitive_error(two, n, rng, [](Tape& t, std::vector<Var>& v) { return abs_diff(t, v[0], v[1]); }) < kTol);
    }
    CHECK(primitive_error(two, 1, rng, [](Tape& t, std::vector<Var>& v) { return cosine(t, v[0], v[1]); }) < kTol);
    CHECK(primitive_error(two, 2 * n, rng, [](Tape& t, std::vector<Var>& v) { return concat(t, std::span<const Var>(v)); }) <
          kTol);
    CHECK(primitive_error(two, n, rng, [](Tape& t, std::vector<Var>& v) { return mean_rows(t, std::span<const Var>(v)); }) <
          kTol);

    std::vector<Parameter> rows{vec("r0", n), vec("r1", n), vec("r2", n)};
    bool untied = true;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> col{rows[0].value(i, 0), rows[1].value(i, 0), rows[2].value(i, 0)};
      std::sort(col.begin(), col.end());
      untied = untied && col[2] - col[1] > 1e-4;
    }
    if (untied) {
      CHECK(primitive_error(rows, n, rng,
                            [](Tape& t, std::vector<Var>& v) { return max_over_time(t, std::span<const Var>(v)); }) < kTol);
    }
  }
}

TEST_CASE("same seeded forward pass twice is bit-identical; extended precision agrees") {
  auto run = [](auto& t) {
    Rng rng = Rng::stream(3, "test");
    Parameter W("W", 4, 3), b("b", 4, 1);
    randomize(W, rng);
    randomize(b, rng);
    Var x = t.constant(random_vector(rng, 3));
    Var h = tanh_op(t, linear(t, x, W, b));
    Var s = softmax(t, h);
    Var c = cosine(t, s, h);
    const Var parts[] = {s, c};
    auto v = t.value(concat(t, parts));
    return Vector(v.begin(), v.end());
  };
  Tape t1(false), t2(false);
  ExtendedTape te(false);
  const Vector a = run(t1);
  const Vector b = run(t2);
  CHECK(a == b);
  CHECK(linf(a, run(te)) < 1e-14);
}

TEST_CASE("backward on a non-recording tape is rejected") {
  Tape t(false);
  Var x = t.constant(Vector{1.0});
  CHECK_THROWS(t.backward(x));
}
