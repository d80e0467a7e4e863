#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "rgsvae/graph.hpp"
#include "rgsvae/rng.hpp"
#include "testutil.hpp"

using namespace rgsvae;

namespace {

Tensor vec(std::initializer_list<double> vals) {
  Tensor t = Tensor::vector(static_cast<int64_t>(vals.size()));
  int64_t i = 0;
  for (double v : vals) t[i++] = v;
  return t;
}

Tensor mat(int64_t rows, int64_t cols, std::initializer_list<double> vals) {
  Tensor t = Tensor::matrix(rows, cols);
  int64_t i = 0;
  for (double v : vals) t[i++] = v;
  return t;
}

}  // namespace

TEST_CASE("matmul forward examples") {
  Graph g;
  {
    DiffValue w = g.leaf(mat(2, 2, {1, 0, 0, 1}));
    DiffValue x = g.leaf(vec({3, 4}));
    DiffValue y = g.matmul(w, x);
    CHECK(y.value()[0] == 3.0);
    CHECK(y.value()[1] == 4.0);
  }
  {
    DiffValue w = g.leaf(mat(2, 2, {1, 2, 3, 4}));
    DiffValue x = g.leaf(vec({1, 1}));
    DiffValue y = g.matmul(w, x);
    CHECK(y.value()[0] == 3.0);
    CHECK(y.value()[1] == 7.0);
  }
  CHECK_THROWS_AS(g.matmul(g.leaf(mat(2, 3, {1, 2, 3, 4, 5, 6})),
                           g.leaf(vec({1, 1}))),
                  shape_error);
}

TEST_CASE("matmul gradient vs finite differences") {
  CounterRng rng(5);
  Tensor w0 = Tensor::matrix(3, 4);
  Tensor x0 = Tensor::vector(4);
  rng.fill_normal(w0);
  rng.fill_normal(x0);

  Graph g;
  DiffValue w = g.leaf(w0);
  DiffValue x = g.leaf(x0);
  DiffValue root = g.sum(g.matmul(w, x));
  g.backward(root);

  const double h = 1e-5;
  for (int64_t i = 0; i < w0.size(); ++i) {
    const auto f = [&](double v) {
      Tensor wp = w0;
      wp[i] = v;
      Graph g2;
      return g2.sum(g2.matmul(g2.leaf(wp), g2.leaf(x0))).value()[0];
    };
    const double fd = (f(w0[i] + h) - f(w0[i] - h)) / (2.0 * h);
    CHECK(testutil::rel_err(w.grad()[i], fd) <= 1e-6);
  }
  for (int64_t i = 0; i < x0.size(); ++i) {
    const auto f = [&](double v) {
      Tensor xp = x0;
      xp[i] = v;
      Graph g2;
      return g2.sum(g2.matmul(g2.leaf(w0), g2.leaf(xp))).value()[0];
    };
    const double fd = (f(x0[i] + h) - f(x0[i] - h)) / (2.0 * h);
    CHECK(testutil::rel_err(x.grad()[i], fd) <= 1e-6);
  }
}

TEST_CASE("elementwise forward examples") {
  Graph g;
  DiffValue e = g.exp(g.leaf(vec({0, 1})));
  CHECK(e.value()[0] == 1.0);
  CHECK(e.value()[1] == doctest::Approx(std::exp(1.0)).epsilon(1e-15));

  DiffValue r = g.max0(g.leaf(vec({-2, 0, 3})));
  CHECK(r.value()[0] == 0.0);
  CHECK(r.value()[1] == 0.0);
  CHECK(r.value()[2] == 3.0);

  DiffValue s = g.sigmoid(g.leaf(vec({0})));
  CHECK(s.value()[0] == 0.5);

  CHECK_THROWS_AS(g.log(g.leaf(vec({1.0, 0.0}))), std::domain_error);
  CHECK_THROWS_AS(g.add(g.leaf(vec({1, 2})), g.leaf(vec({1, 2, 3}))),
                  shape_error);
}

TEST_CASE("backward basics") {
  {
    Graph g;
    DiffValue x = g.leaf(vec({1, 2, 3}));
    g.backward(g.sum(x));
    for (int i = 0; i < 3; ++i) CHECK(x.grad()[i] == 1.0);
  }
  {
    Graph g;
    DiffValue x = g.leaf(vec({0, 0, 0}));
    g.backward(g.sum(g.exp(x)));
    for (int i = 0; i < 3; ++i) CHECK(x.grad()[i] == 1.0);
  }
  {
    // non-scalar root is a contract violation
    Graph g;
    DiffValue x = g.leaf(vec({1, 2}));
    CHECK_THROWS_AS(g.backward(x), std::logic_error);
  }
}

TEST_CASE("repeated backward accumulates") {
  Graph g;
  DiffValue x = g.leaf(vec({1, 2}));
  DiffValue root = g.sum(g.square(x));
  g.backward(root);
  CHECK(x.grad()[0] == 2.0);
  CHECK(x.grad()[1] == 4.0);
  g.backward(root);
  CHECK(x.grad()[0] == 4.0);
  CHECK(x.grad()[1] == 8.0);
  g.zero_grad();
  g.backward(root);
  CHECK(x.grad()[0] == 2.0);
}

TEST_CASE("backward is deterministic bit for bit") {
  CounterRng rng(42);
  Tensor w0 = Tensor::matrix(6, 5);
  Tensor x0 = Tensor::matrix(5, 4);
  rng.fill_normal(w0);
  rng.fill_normal(x0);

  const auto run = [&](std::vector<double>* grads) {
    Graph g;
    DiffValue w = g.leaf(w0);
    DiffValue x = g.leaf(x0);
    DiffValue y = g.sigmoid(g.matmul(w, x));
    DiffValue root = g.sum(g.mul(y, y));
    g.backward(root);
    for (int64_t i = 0; i < w.grad().size(); ++i) {
      grads->push_back(w.grad()[i]);
    }
  };
  std::vector<double> a, b;
  run(&a);
  run(&b);
  CHECK(a == b);
}

TEST_CASE("composite expression gradients vs finite differences") {
  // exercises div, sqrt, reciprocal, normal_cdf, normal_log_cdf, inv_mills,
  // softplus, clamp, tile_cols, add_cols in one expression
  CounterRng rng(99);
  Tensor x0 = Tensor::vector(6);
  for (int64_t i = 0; i < 6; ++i) x0[i] = -1.5 + 3.0 * rng.next_uniform();

  const auto value = [&](const Tensor& xin) {
    Graph g;
    DiffValue x = g.leaf(xin);
    DiffValue b = g.tile_cols(x, 3);
    DiffValue c = g.add_cols(b, x);
    DiffValue u = g.normal_cdf(c);
    DiffValue v = g.normal_log_cdf(c);
    DiffValue w = g.inv_mills(g.clamp(c, -3.0, 3.0));
    DiffValue r = g.softplus(g.div(g.sqrt(g.add_scalar(g.square(c), 1.0)),
                                   g.add_scalar(u, 1.0)));
    DiffValue all = g.add(g.add(r, g.mul(u, v)), g.reciprocal(w));
    return g.sum(all).value()[0];
  };

  {
    Graph g2;
    DiffValue xx = g2.leaf(x0);
    DiffValue b = g2.tile_cols(xx, 3);
    DiffValue c = g2.add_cols(b, xx);
    DiffValue u = g2.normal_cdf(c);
    DiffValue v = g2.normal_log_cdf(c);
    DiffValue w = g2.inv_mills(g2.clamp(c, -3.0, 3.0));
    DiffValue r = g2.softplus(g2.div(g2.sqrt(g2.add_scalar(g2.square(c), 1.0)),
                                     g2.add_scalar(u, 1.0)));
    DiffValue all = g2.add(g2.add(r, g2.mul(u, v)), g2.reciprocal(w));
    DiffValue root = g2.sum(all);
    g2.backward(root);
    const double h = 1e-5;
    for (int64_t i = 0; i < 6; ++i) {
      Tensor xp = x0;
      xp[i] = x0[i] + h;
      const double up = value(xp);
      xp[i] = x0[i] - h;
      const double dn = value(xp);
      const double fd = (up - dn) / (2.0 * h);
      CHECK(testutil::rel_err(xx.grad()[i], fd) <= 1e-5);
    }
  }
}

TEST_CASE("batchnorm train mode normalizes and matches finite differences") {
  CounterRng rng(1234);
  const int64_t d = 4, n = 12;
  Tensor x0 = Tensor::matrix(d, n);
  rng.fill_normal(x0);
  for (int64_t i = 0; i < x0.size(); ++i) x0[i] = 2.0 * x0[i] + 0.7;
  Tensor gain0 = Tensor::vector(d, 1.0);
  Tensor shift0 = Tensor::vector(d, 0.0);
  const double eps = 1e-5;

  Tensor bm, bv;
  Graph g;
  DiffValue x = g.leaf(x0);
  DiffValue gain = g.leaf(gain0);
  DiffValue shift = g.leaf(shift0);
  DiffValue y = g.batchnorm_train(x, gain, shift, eps, &bm, &bv);

  for (int64_t i = 0; i < d; ++i) {
    double mean = 0.0, var = 0.0;
    for (int64_t j = 0; j < n; ++j) mean += y.value()(i, j);
    mean /= n;
    for (int64_t j = 0; j < n; ++j) {
      const double dv = y.value()(i, j) - mean;
      var += dv * dv;
    }
    var /= n;
    CHECK(std::abs(mean) <= 1e-10);
    // output variance is batch_var / (batch_var + eps)
    CHECK(var == doctest::Approx(bv[i] / (bv[i] + eps)).epsilon(1e-9));
  }

  // gradient check through a curved scalar functional
  const auto functional = [&](const Tensor& xin, const Tensor& gin,
                              const Tensor& sin) {
    Graph g2;
    DiffValue xx = g2.leaf(xin);
    DiffValue gg = g2.leaf(gin);
    DiffValue ss = g2.leaf(sin);
    DiffValue yy = g2.batchnorm_train(xx, gg, ss, eps, nullptr, nullptr);
    return g2.sum(g2.mul(g2.sigmoid(yy), yy)).value()[0];
  };
  Graph g3;
  DiffValue xx = g3.leaf(x0);
  DiffValue gg = g3.leaf(gain0);
  DiffValue ss = g3.leaf(shift0);
  DiffValue yy = g3.batchnorm_train(xx, gg, ss, eps, nullptr, nullptr);
  g3.backward(g3.sum(g3.mul(g3.sigmoid(yy), yy)));

  const double h = 1e-5;
  for (int64_t i = 0; i < x0.size(); ++i) {
    Tensor xp = x0;
    xp[i] = x0[i] + h;
    const double up = functional(xp, gain0, shift0);
    xp[i] = x0[i] - h;
    const double dn = functional(xp, gain0, shift0);
    CHECK(testutil::rel_err(xx.grad()[i], (up - dn) / (2 * h)) <= 1e-5);
  }
  for (int64_t i = 0; i < d; ++i) {
    Tensor gp = gain0;
    gp[i] = gain0[i] + h;
    const double up = functional(x0, gp, shift0);
    gp[i] = gain0[i] - h;
    const double dn = functional(x0, gp, shift0);
    CHECK(testutil::rel_err(gg.grad()[i], (up - dn) / (2 * h)) <= 1e-5);
    Tensor sp = shift0;
    sp[i] = shift0[i] + h;
    const double up2 = functional(x0, gain0, sp);
    sp[i] = shift0[i] - h;
    const double dn2 = functional(x0, gain0, sp);
    CHECK(testutil::rel_err(ss.grad()[i], (up2 - dn2) / (2 * h)) <= 1e-5);
  }

  // train mode rejects singleton batches
  Graph g4;
  CHECK_THROWS_AS(g4.batchnorm_train(g4.leaf(Tensor::matrix(2, 1)),
                                     g4.leaf(Tensor::vector(2, 1.0)),
                                     g4.leaf(Tensor::vector(2)), eps, nullptr,
                                     nullptr),
                  std::invalid_argument);
}

TEST_CASE("batchnorm eval mode with unit statistics is affine identity") {
  Graph g;
  Tensor x0 = mat(2, 3, {1, 2, 3, 4, 5, 6});
  DiffValue y = g.batchnorm_eval(g.leaf(x0), g.leaf(Tensor::vector(2, 1.0)),
                                 g.leaf(Tensor::vector(2, 0.0)),
                                 Tensor::vector(2, 0.0),
                                 Tensor::vector(2, 1.0), 0.0);
  for (int64_t i = 0; i < x0.size(); ++i) {
    CHECK(y.value()[i] == doctest::Approx(x0[i]).epsilon(1e-12));
  }
}
