#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "rgsvae/inference.hpp"
#include "rgsvae/selfcheck.hpp"
#include "rgsvae/special_math.hpp"
#include "testutil.hpp"

using namespace rgsvae;

namespace {

struct Ctx {
  Graph g;
  Binding bound;
  TensorMap stats;
  PassContext ctx;

  Ctx(const ModelSpec& spec, const TensorMap& params, PassMode mode)
      : bound(bind_params(g, params)), stats(init_bn_stats(spec)),
        ctx{&g, &bound, &stats, mode, 1e-5, 0.9} {}
};

void zero_encoder(TensorMap& params) {
  for (auto& [name, t] : params) {
    if (name.rfind("enc.", 0) == 0) t.fill(0.0);
  }
}

}  // namespace

TEST_CASE("merge_posterior examples") {
  {
    const auto m = merge_posterior({0.0, 1.0}, {2.0, 1.0});
    CHECK(m.mu == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m.sigma == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  }
  {
    // vague likelihood washes out
    const auto m = merge_posterior({0.7, 1.0}, {1.2, std::exp(5.0)});
    CHECK(m.mu == doctest::Approx(0.7).epsilon(1e-4));
    CHECK(m.sigma == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("merge_posterior equals the product-of-Gaussians oracle") {
  CounterRng rng(2);
  for (int i = 0; i < 5000; ++i) {
    const double mu = -4.0 + 8.0 * rng.next_uniform();
    const double s = std::exp(-3.0 + 6.0 * rng.next_uniform());
    const double mt = -4.0 + 8.0 * rng.next_uniform();
    const double st = std::exp(-3.0 + 6.0 * rng.next_uniform());
    const auto m = merge_posterior({mu, s}, {mt, st});
    // independent route: renormalized N(mu,s^2) x N(mt,st^2)
    const double var = (s * s * st * st) / (s * s + st * st);
    const double mean = (mu * st * st + mt * s * s) / (s * s + st * st);
    CHECK(m.sigma * m.sigma == doctest::Approx(var).epsilon(1e-12));
    CHECK(m.mu == doctest::Approx(mean).epsilon(1e-10));
    CHECK(m.sigma < std::min(s, st));
  }
}

TEST_CASE("likelihood_pass: zero encoder gives unit likelihoods") {
  const ModelSpec spec{{2, 3}, 4, 21};
  TensorMap params = init_params(spec);
  zero_encoder(params);
  CounterRng rng(3);
  const Tensor x = testutil::random_binary(4, 5, 0.4, rng);

  for (PassMode mode : {PassMode::kOff, PassMode::kEval}) {
    Ctx c(spec, params, mode);
    auto lik = likelihood_pass(c.ctx, spec, x);
    for (const auto& l : lik) {
      for (int64_t i = 0; i < l.mu_tilde.value().size(); ++i) {
        CHECK(l.mu_tilde.value()[i] == 0.0);
        CHECK(l.sigma_tilde.value()[i] == 1.0);
      }
    }
  }
}

TEST_CASE("likelihood_pass: identity weight forwards the data") {
  const ModelSpec spec{{4}, 4, 22};
  TensorMap params = init_params(spec);
  zero_encoder(params);
  Tensor& w = params.at(names::enc_w_mu(0));
  for (int64_t i = 0; i < 4; ++i) w(i, i) = 1.0;

  Tensor x = Tensor::matrix(4, 1);
  x[0] = 1.0;
  Ctx c(spec, params, PassMode::kOff);
  auto lik = likelihood_pass(c.ctx, spec, x);
  CHECK(lik[0].mu_tilde.value()[0] == 1.0);
  CHECK(lik[0].mu_tilde.value()[1] == 0.0);
}

TEST_CASE("likelihood_pass is deterministic") {
  const ModelSpec spec{{3, 4}, 6, 23};
  TensorMap params = init_params(spec);
  CounterRng rng(9);
  const Tensor x = testutil::random_binary(6, 3, 0.3, rng);
  // draws from an unrelated stream must not influence the upward pass
  rng.next_normal();

  std::vector<double> a, b;
  for (std::vector<double>* out : {&a, &b}) {
    Ctx c(spec, params, PassMode::kEval);
    auto lik = likelihood_pass(c.ctx, spec, x);
    for (const auto& l : lik) {
      for (int64_t i = 0; i < l.mu_tilde.value().size(); ++i) {
        out->push_back(l.mu_tilde.value()[i]);
        out->push_back(l.sigma_tilde.value()[i]);
      }
    }
  }
  CHECK(a == b);
}

TEST_CASE("downward pass matches the scalar oracle bit for bit") {
  const ModelSpec spec{{2, 3}, 5, 31};
  TensorMap params = init_params(spec);
  CounterRng rng(11);
  const Tensor x = testutil::random_binary(5, 4, 0.4, rng);
  CounterRng noise(12);

  for (PassMode mode : {PassMode::kEval, PassMode::kTrain}) {
    Ctx c(spec, params, mode);
    PosteriorPass pass = posterior_downward_pass(c.ctx, spec, x, &noise);
    auto lik_again = likelihood_pass(c.ctx, spec, x);  // same graph, same bits

    double kl_oracle_total = 0.0;
    for (int j = 0; j <= spec.levels(); ++j) {
      const auto& st = pass.layers[j];
      const Tensor& pm = st.prior_mu.value();
      const Tensor& ps = st.prior_sigma.value();
      const Tensor& lm = lik_again[j].mu_tilde.value();
      const Tensor& ls = lik_again[j].sigma_tilde.value();
      double layer_kl = 0.0;
      for (int64_t i = 0; i < pm.size(); ++i) {
        const auto merged = merge_posterior({pm[i], ps[i]}, {lm[i], ls[i]});
        CHECK(st.mu_hat.value()[i] == merged.mu);
        CHECK(st.sigma_hat.value()[i] == merged.sigma);
        // precision contraction
        CHECK(merged.sigma < std::min(ps[i], ls[i]));
        const double kl = rg_kl({merged.mu, merged.sigma}, {pm[i], ps[i]});
        CHECK(st.kl_elems.value()[i] == kl);
        CHECK(kl >= 0.0);
        layer_kl += kl;
        // sampled z reproduces the scalar sampler
        CHECK(st.z.value()[i] ==
              rg_sample({merged.mu, merged.sigma}, {st.eps[i]}));
        CHECK(st.z.value()[i] >= 0.0);
      }
      CHECK(st.kl_mean == doctest::Approx(layer_kl / 4.0).epsilon(1e-14));
      kl_oracle_total += layer_kl;
    }
    const double bound = pass.bound_mean.value()[0];
    double recon = 0.0;
    for (int64_t i = 0; i < pass.recon_elems.value().size(); ++i) {
      recon += pass.recon_elems.value()[i];
    }
    CHECK(bound ==
          doctest::Approx((recon - kl_oracle_total) / 4.0).epsilon(1e-13));
  }
}

TEST_CASE("single-unit model: closed-form posterior") {
  const ModelSpec spec{{1}, 2, 33};
  TensorMap params = init_params(spec);
  zero_encoder(params);
  params.at(names::top_mu).fill(0.0);

  Tensor x = Tensor::matrix(2, 1);
  Ctx c(spec, params, PassMode::kEval);
  CounterRng noise(1);
  PosteriorPass pass = posterior_downward_pass(c.ctx, spec, x, &noise);
  const auto& st = pass.layers[0];
  CHECK(st.mu_hat.value()[0] == 0.0);
  CHECK(st.sigma_hat.value()[0] ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  const double expect =
      rg_kl({0.0, 1.0 / std::sqrt(2.0)}, {0.0, 1.0});
  CHECK(st.kl_elems.value()[0] == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("downward pass with a fixed seed is bit-reproducible") {
  const ModelSpec spec{{2, 4}, 6, 34};
  TensorMap params = init_params(spec);
  CounterRng rng(77);
  const Tensor x = testutil::random_binary(6, 3, 0.35, rng);

  std::vector<double> runs[2];
  for (int r = 0; r < 2; ++r) {
    Ctx c(spec, params, PassMode::kEval);
    CounterRng noise(4242);
    PosteriorPass pass = posterior_downward_pass(c.ctx, spec, x, &noise);
    for (const auto& st : pass.layers) {
      for (int64_t i = 0; i < st.z.value().size(); ++i) {
        runs[r].push_back(st.z.value()[i]);
      }
    }
    runs[r].push_back(pass.bound_mean.value()[0]);
  }
  CHECK(runs[0] == runs[1]);
}

TEST_CASE("elbo: vague encoder reduces the bound to reconstruction") {
  const ModelSpec spec{{2, 3}, 4, 35};
  TensorMap params = init_params(spec);
  zero_encoder(params);
  params.at(names::top_mu).fill(0.0);
  // wash out every likelihood term
  for (int j = 0; j <= spec.levels(); ++j) {
    params.at(names::enc_b_sigma(j)).fill(10.0);  // clamps to log-sigma 5
  }
  CounterRng rng(5);
  const Tensor x = testutil::random_binary(4, 3, 0.5, rng);

  Ctx c(spec, params, PassMode::kOff);
  CounterRng noise(6);
  ElboParts parts = elbo(c.ctx, spec, x, &noise);
  double kl = 0.0;
  for (double v : parts.kl_layer) kl += v;
  CHECK(kl <= 1e-6);
  CHECK(parts.bound == doctest::Approx(parts.recon).epsilon(1e-9));
}

TEST_CASE("elbo: zero decoder scores log-half per pixel") {
  const ModelSpec spec{{2}, 784, 36};
  TensorMap params = init_params(spec);
  params.at(names::dec_w).fill(0.0);
  params.at(names::dec_b).fill(0.0);
  CounterRng rng(7);
  const Tensor x = testutil::random_binary(784, 2, 0.13, rng);

  Ctx c(spec, params, PassMode::kEval);
  CounterRng noise(8);
  ElboParts parts = elbo(c.ctx, spec, x, &noise);
  CHECK(parts.recon == doctest::Approx(-543.42738955899712).epsilon(1e-12));
}

TEST_CASE("elbo names the failing layer on non-finite input") {
  const ModelSpec spec{{2, 3}, 4, 37};
  TensorMap params = init_params(spec);
  params.at(names::gen_w_mu(1))(0, 0) = std::nan("");
  CounterRng rng(5);
  const Tensor x = testutil::random_binary(4, 3, 0.4, rng);
  Ctx c(spec, params, PassMode::kEval);
  CounterRng noise(6);
  CHECK_THROWS_WITH_AS(elbo(c.ctx, spec, x, &noise),
                       doctest::Contains("layer 1"), std::runtime_error);
}

TEST_CASE("is_loglik: K=1 equals the first weight; estimator is consistent") {
  const ModelSpec spec{{2}, 3, 38};
  TensorMap params = init_params(spec);
  TensorMap stats = init_bn_stats(spec);
  Tensor x = Tensor::matrix(3, 1);
  x[0] = 1.0;

  CounterRng r0(1);
  CHECK_THROWS_AS(is_loglik_estimate(spec, params, stats, 1e-5, x, 0, r0),
                  std::invalid_argument);

  CounterRng r1(99), r2(99);
  const double est1 = is_loglik_estimate(spec, params, stats, 1e-5, x, 1, r1);
  const auto w = is_log_weights(spec, params, stats, 1e-5, x, 1, r2);
  CHECK(est1 == w[0]);
}

TEST_CASE("is_loglik grows with K in expectation") {
  const ModelSpec spec{{2}, 3, 39};
  TensorMap params = init_params(spec);
  TensorMap stats = init_bn_stats(spec);
  Tensor x = Tensor::matrix(3, 1);
  x[1] = 1.0;

  CounterRng rng(123);
  double mean1 = 0.0, mean20 = 0.0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    mean1 += is_loglik_estimate(spec, params, stats, 1e-5, x, 1, rng);
    mean20 += is_loglik_estimate(spec, params, stats, 1e-5, x, 20, rng);
  }
  CHECK(mean20 / reps >= mean1 / reps);
}

TEST_CASE("single latent unit: importance sampling approaches quadrature") {
  const ModelSpec spec{{1}, 3, 777};
  TensorMap params = init_params(spec);
  TensorMap stats = init_bn_stats(spec);
  params.at(names::top_mu)[0] = 0.4;

  Tensor x = Tensor::matrix(3, 1);
  x[0] = 1.0;
  x[2] = 1.0;

  // 1-D quadrature over the latent: point mass at zero + positive part
  const Tensor& wd = params.at(names::dec_w);
  const Tensor& bd = params.at(names::dec_b);
  const double mu0 = params.at(names::top_mu)[0];
  const auto loglik_given_z = [&](double z) {
    double ll = 0.0;
    for (int64_t i = 0; i < 3; ++i) {
      const double logit = bd[i] + wd(i, 0) * z;
      const double sp = std::max(logit, 0.0) +
                        std::log1p(std::exp(-std::abs(logit)));
      ll += x[i] == 1.0 ? logit - sp : -sp;
    }
    return ll;
  };
  const int nq = 20000;
  const double hi = mu0 + 10.0;
  double integral = std_normal_cdf(-mu0) * std::exp(loglik_given_z(0.0));
  for (int i = 0; i < nq; ++i) {  // midpoint rule
    const double z = (i + 0.5) * hi / nq;
    integral += std::exp(loglik_given_z(z)) * std_normal_pdf(z - mu0) *
                (hi / nq);
  }
  const double truth = std::log(integral);

  CounterRng rng(31337);
  const double est =
      is_loglik_estimate(spec, params, stats, 1e-5, x, 10000, rng);
  CHECK(std::abs(est - truth) <= 0.01);
}

TEST_CASE("mean single-sample bound stays below the IS estimate") {
  CounterRng model_rng(17);
  for (int trial = 0; trial < 4; ++trial) {
    const ModelSpec spec{{2, 3}, 5, 1000 + trial};
    TensorMap params = init_params(spec);
    TensorMap stats = init_bn_stats(spec);
    Tensor x = Tensor::matrix(5, 1);
    for (int64_t i = 0; i < 5; ++i) {
      x[i] = model_rng.next_uniform() < 0.4 ? 1.0 : 0.0;
    }

    CounterRng noise(271 + trial);
    const int reps = 400;
    double acc = 0.0, acc2 = 0.0;
    for (int r = 0; r < reps; ++r) {
      Ctx c(spec, params, PassMode::kEval);
      ElboParts parts = elbo(c.ctx, spec, x, &noise);
      acc += parts.bound;
      acc2 += parts.bound * parts.bound;
    }
    const double mean = acc / reps;
    const double se =
        std::sqrt(std::max(acc2 / reps - mean * mean, 0.0) / reps);

    CounterRng is_rng(999 + trial);
    const double est =
        is_loglik_estimate(spec, params, stats, 1e-5, x, 500, is_rng);
    CHECK(mean <= est + 4.0 * se);
  }
}

TEST_CASE("full-model gradients match finite differences") {
  const CheckResult r = check_elbo_gradients(314159);
  INFO(r.detail);
  CHECK(r.pass);
  CHECK(r.worst <= 1e-4);
}
