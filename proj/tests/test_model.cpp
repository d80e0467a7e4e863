#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "rgsvae/model.hpp"
#include "rgsvae/special_math.hpp"
#include "testutil.hpp"

using namespace rgsvae;

namespace {

void zero_all(TensorMap& params) {
  for (auto& [name, t] : params) {
    if (name.find(".gain") != std::string::npos) {
      t.fill(1.0);
    } else {
      t.fill(0.0);
    }
  }
}

struct Ctx {
  Graph g;
  Binding bound;
  TensorMap stats;
  PassContext ctx;

  Ctx(const ModelSpec& spec, const TensorMap& params, PassMode mode)
      : bound(bind_params(g, params)), stats(init_bn_stats(spec)),
        ctx{&g, &bound, &stats, mode, 1e-5, 0.9} {}
};

}  // namespace

TEST_CASE("prior_params: raw recursion examples") {
  const ModelSpec spec{{2, 2}, 3, 1};
  TensorMap params = init_params(spec);
  zero_all(params);

  {
    // all-zero parameters: mu = 0, sigma = 1 for any z
    Ctx c(spec, params, PassMode::kOff);
    DiffValue z = c.g.constant(Tensor::matrix(2, 1, 7.0));
    auto [mu, sigma] = prior_params(c.ctx, 1, z);
    CHECK(mu.value()[0] == 0.0);
    CHECK(mu.value()[1] == 0.0);
    CHECK(sigma.value()[0] == 1.0);
    CHECK(sigma.value()[1] == 1.0);
  }
  {
    // identity weight passes z through
    TensorMap p2 = params;
    Tensor& w = p2.at(names::gen_w_mu(1));
    w(0, 0) = 1.0;
    w(1, 1) = 1.0;
    Ctx c(spec, p2, PassMode::kOff);
    Tensor zv = Tensor::matrix(2, 1);
    zv[0] = 1.0;
    zv[1] = 2.0;
    auto [mu, sigma] = prior_params(c.ctx, 1, c.g.constant(zv));
    CHECK(mu.value()[0] == 1.0);
    CHECK(mu.value()[1] == 2.0);
  }
  {
    // clamp pins log-sigma at +5
    TensorMap p2 = params;
    p2.at(names::gen_b_sigma(1)).fill(10.0);
    Ctx c(spec, p2, PassMode::kOff);
    auto [mu, sigma] = prior_params(c.ctx, 1, c.g.constant(Tensor::matrix(2, 1)));
    CHECK(sigma.value()[0] == doctest::Approx(std::exp(5.0)).epsilon(1e-15));
  }
}

TEST_CASE("decode_logits examples") {
  const ModelSpec spec{{2}, 2, 1};
  TensorMap params = init_params(spec);
  zero_all(params);
  {
    Ctx c(spec, params, PassMode::kEval);
    DiffValue z = c.g.constant(Tensor::matrix(2, 1, 0.3));
    DiffValue logits = decode_logits(c.ctx, z);
    CHECK(logits.value()[0] == 0.0);
    CHECK(logits.value()[1] == 0.0);
    DiffValue probs = c.g.sigmoid(logits);
    CHECK(probs.value()[0] == 0.5);
  }
  {
    TensorMap p2 = params;
    p2.at(names::dec_b)[0] = -2.0;
    p2.at(names::dec_b)[1] = 3.0;
    Ctx c(spec, p2, PassMode::kEval);
    DiffValue logits = decode_logits(c.ctx, c.g.constant(Tensor::matrix(2, 1)));
    CHECK(logits.value()[0] == -2.0);
    CHECK(logits.value()[1] == 3.0);
  }
}

TEST_CASE("bernoulli log-likelihood") {
  Graph g;
  {
    Tensor x = Tensor::matrix(784, 1);
    CounterRng rng(3);
    for (int64_t i = 0; i < x.size(); ++i) {
      x[i] = rng.next_uniform() < 0.5 ? 1.0 : 0.0;
    }
    DiffValue logits = g.constant(Tensor::matrix(784, 1, 0.0));
    DiffValue ll = g.sum(bernoulli_loglik_elems(g, x, logits));
    CHECK(ll.value()[0] == doctest::Approx(-543.42738955899712).epsilon(1e-12));
  }
  {
    Tensor x = Tensor::matrix(1, 1, 1.0);
    DiffValue big = g.constant(Tensor::matrix(1, 1, 50.0));
    DiffValue ll = g.sum(bernoulli_loglik_elems(g, x, big));
    CHECK(std::abs(ll.value()[0]) < 1e-20);
    CHECK(std::isfinite(ll.value()[0]));

    DiffValue neg = g.constant(Tensor::matrix(1, 1, -50.0));
    DiffValue ll2 = g.sum(bernoulli_loglik_elems(g, x, neg));
    CHECK(ll2.value()[0] == doctest::Approx(-50.0).epsilon(1e-12));
  }
  {
    Tensor bad = Tensor::matrix(1, 1, 0.25);
    DiffValue logits = g.constant(Tensor::matrix(1, 1, 0.0));
    CHECK_THROWS_AS(bernoulli_loglik_elems(g, bad, logits), std::domain_error);
  }
}

TEST_CASE("ancestral sampling: total rectification pins the decoder") {
  const ModelSpec spec{{3}, 4, 9};
  TensorMap params = init_params(spec);
  zero_all(params);
  params.at(names::top_mu).fill(-1e6);
  params.at(names::dec_b)[0] = -2.0;
  params.at(names::dec_b)[1] = 2.0;
  TensorMap stats = init_bn_stats(spec);

  CounterRng rng(5);
  AncestralSample s = ancestral_sample(spec, params, stats, 1e-5, 8, rng);
  for (int64_t i = 0; i < s.z[0].size(); ++i) CHECK(s.z[0][i] == 0.0);
  for (int64_t c = 0; c < 8; ++c) {
    CHECK(s.x_probs(0, c) ==
          doctest::Approx(1.0 / (1.0 + std::exp(2.0))).epsilon(1e-12));
    CHECK(s.x_probs(1, c) ==
          doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
  }
}

TEST_CASE("ancestral sampling: deep rectification cascades") {
  const ModelSpec spec{{2, 3}, 4, 10};
  TensorMap params = init_params(spec);
  zero_all(params);
  params.at(names::top_mu).fill(-1e6);
  params.at(names::gen_b_mu(1)).fill(-1e6);
  TensorMap stats = init_bn_stats(spec);
  CounterRng rng(6);
  AncestralSample s = ancestral_sample(spec, params, stats, 1e-5, 16, rng);
  for (const Tensor& z : s.z) {
    for (int64_t i = 0; i < z.size(); ++i) CHECK(z[i] == 0.0);
  }
}

TEST_CASE("ancestral sampling is reproducible and nonnegative") {
  const ModelSpec spec{{3, 5}, 9, 42};
  TensorMap params = init_params(spec);
  TensorMap stats = init_bn_stats(spec);

  CounterRng r1(1001), r2(1001);
  AncestralSample a = ancestral_sample(spec, params, stats, 1e-5, 64, r1);
  AncestralSample b = ancestral_sample(spec, params, stats, 1e-5, 64, r2);
  CHECK(r1.counter() == r2.counter());
  for (size_t j = 0; j < a.z.size(); ++j) {
    for (int64_t i = 0; i < a.z[j].size(); ++i) {
      CHECK(a.z[j][i] == b.z[j][i]);
      CHECK(a.z[j][i] >= 0.0);
    }
  }
  for (int64_t i = 0; i < a.x_probs.size(); ++i) {
    CHECK(a.x_probs[i] == b.x_probs[i]);
  }
}

TEST_CASE("top-layer sparsity matches the analytic mass") {
  const ModelSpec spec{{4}, 6, 77};
  TensorMap params = init_params(spec);
  Tensor& mu0 = params.at(names::top_mu);
  mu0[0] = -0.8;
  mu0[1] = -0.2;
  mu0[2] = 0.3;
  mu0[3] = 1.1;
  TensorMap stats = init_bn_stats(spec);

  const int64_t n = 100000;
  CounterRng rng(13);
  int64_t zeros = 0;
  double expected = 0.0;
  for (int64_t done = 0; done < n; done += 10000) {
    AncestralSample s =
        ancestral_sample(spec, params, stats, 1e-5, 10000, rng);
    for (int64_t i = 0; i < s.z[0].size(); ++i) {
      zeros += s.z[0][i] == 0.0 ? 1 : 0;
    }
  }
  double var_sum = 0.0;
  for (int64_t i = 0; i < 4; ++i) {
    const double q = std_normal_cdf(-mu0[i]);
    expected += q;
    var_sum += q * (1.0 - q);
  }
  const double total = static_cast<double>(4 * n);
  const double frac = static_cast<double>(zeros) / total;
  const double mean_mass = expected / 4.0;
  const double se = std::sqrt(var_sum / 4.0 / total);
  CHECK(std::abs(frac - mean_mass) <= 4.0 * se);
}

TEST_CASE("prior sigma stays inside the clamp band") {
  const ModelSpec spec{{3, 4}, 5, 3};
  TensorMap params = init_params(spec);
  // exaggerate the sigma weights so the clamp must engage
  for (auto& [name, t] : params) {
    if (name.find("w_sigma") != std::string::npos) {
      for (int64_t i = 0; i < t.size(); ++i) t[i] *= 50.0;
    }
  }
  Ctx c(spec, params, PassMode::kOff);
  Tensor zv = Tensor::matrix(3, 7);
  CounterRng rng(4);
  for (int64_t i = 0; i < zv.size(); ++i) zv[i] = 3.0 * rng.next_uniform();
  auto [mu, sigma] = prior_params(c.ctx, 1, c.g.constant(zv));
  for (int64_t i = 0; i < sigma.value().size(); ++i) {
    CHECK(sigma.value()[i] >= std::exp(-5.0));
    CHECK(sigma.value()[i] <= std::exp(5.0));
  }
}

TEST_CASE("model spec validation") {
  CHECK_THROWS_AS((ModelSpec{{}, 4, 0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((ModelSpec{{0}, 4, 0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((ModelSpec{{2}, 0, 0}).validate(), std::invalid_argument);
  CHECK_NOTHROW((ModelSpec{{2}, 1, 0}).validate());
}
