#include "rgsvae/inference.hpp"

#include <cmath>
#include <stdexcept>

#include "rgsvae/special_math.hpp"

namespace rgsvae {

std::vector<ApproxLikelihood> likelihood_pass(PassContext& ctx,
                                              const ModelSpec& spec,
                                              const Tensor& x) {
  Graph& g = *ctx.g;
  const Binding& b = *ctx.params;
  const int L = spec.levels();
  if (x.rows() != spec.data_dim) {
    throw shape_error("likelihood_pass: data " + x.shape_str() +
                      " does not match data_dim " +
                      std::to_string(spec.data_dim));
  }

  std::vector<ApproxLikelihood> lik(static_cast<size_t>(L) + 1);
  DiffValue rect = g.constant(x);
  for (int j = L; j >= 0; --j) {
    DiffValue pre_mu = g.add_cols(g.matmul(b.at(names::enc_w_mu(j)), rect),
                                  b.at(names::enc_b_mu(j)));
    DiffValue mu_t = bn_site(ctx, names::bn_enc(j, false), pre_mu);
    DiffValue pre_ls = g.add_cols(g.matmul(b.at(names::enc_w_sigma(j)), rect),
                                  b.at(names::enc_b_sigma(j)));
    DiffValue ls_t = bn_site(ctx, names::bn_enc(j, true), pre_ls);
    DiffValue sigma_t = g.exp(g.clamp(ls_t, -kLogSigmaClamp, kLogSigmaClamp));
    lik[static_cast<size_t>(j)] = ApproxLikelihood{mu_t, sigma_t};
    if (j > 0) rect = g.max0(mu_t);
  }
  return lik;
}

UnitGaussianParams merge_posterior(const UnitGaussianParams& prior,
                                   const UnitGaussianParams& lik) {
  // Mirrored by merge_op below; keep the arithmetic sequences identical.
  const double pp = 1.0 / (prior.sigma * prior.sigma);
  const double pl = 1.0 / (lik.sigma * lik.sigma);
  const double s2 = 1.0 / (pp + pl);
  const double sigma_hat = std::sqrt(s2);
  const double mu_hat = (pp * prior.mu + pl * lik.mu) * s2;
  return UnitGaussianParams{mu_hat, sigma_hat};
}

namespace {

struct MergedPosterior {
  DiffValue mu_hat;
  DiffValue sigma_hat;
};

MergedPosterior merge_op(Graph& g, DiffValue prior_mu, DiffValue prior_sigma,
                         DiffValue lik_mu, DiffValue lik_sigma) {
  DiffValue pp = g.reciprocal(g.square(prior_sigma));
  DiffValue pl = g.reciprocal(g.square(lik_sigma));
  DiffValue s2 = g.reciprocal(g.add(pp, pl));
  DiffValue sigma_hat = g.sqrt(s2);
  DiffValue mu_hat =
      g.mul(g.add(g.mul(pp, prior_mu), g.mul(pl, lik_mu)), s2);
  return {mu_hat, sigma_hat};
}

// E_{q | z > 0}[log N(z; m, s^2)] from the q-side truncated moments.
DiffValue truncated_logdens_expectation_op(Graph& g, DiffValue m1,
                                           DiffValue m2, DiffValue m,
                                           DiffValue s2) {
  DiffValue quad = g.add(g.sub(m2, g.mul(g.scale(m, 2.0), m1)), g.square(m));
  DiffValue lognorm = g.scale(g.log(g.scale(s2, kTwoPi)), -0.5);
  return g.sub(lognorm, g.div(quad, g.scale(s2, 2.0)));
}

}  // namespace

// Differentiable twin of rg_log_density_ratio_terms + snap; the scalar path
// in rg.cpp and this composition must stay bit-identical.
DiffValue build_rg_kl(Graph& g, DiffValue mu_hat, DiffValue sigma_hat,
                      DiffValue prior_mu, DiffValue prior_sigma) {
  DiffValue aq = g.neg(g.div(mu_hat, sigma_hat));
  DiffValue ap = g.neg(g.div(prior_mu, prior_sigma));
  DiffValue log_q0 = g.normal_log_cdf(aq);
  DiffValue log_p0 = g.normal_log_cdf(ap);
  DiffValue mass_q0 = g.normal_cdf(aq);
  DiffValue discrete = g.mul(mass_q0, g.sub(log_q0, log_p0));

  DiffValue pos_mass = g.normal_cdf(g.neg(aq));
  DiffValue lam = g.inv_mills(aq);
  DiffValue m1 = g.add(mu_hat, g.mul(sigma_hat, lam));
  DiffValue sq2 = g.square(sigma_hat);
  DiffValue t = g.mul(aq, g.sub(lam, aq));
  DiffValue m2 = g.mul(sq2, g.add_scalar(g.neg(t), 1.0));
  DiffValue e_logq = truncated_logdens_expectation_op(g, m1, m2, mu_hat, sq2);
  DiffValue sp2 = g.square(prior_sigma);
  DiffValue e_logp = truncated_logdens_expectation_op(g, m1, m2, prior_mu, sp2);
  DiffValue continuous = g.mul(pos_mass, g.sub(e_logq, e_logp));
  return g.snap_nonneg(g.add(discrete, continuous));
}

namespace {

double tensor_sum(const Tensor& t) {
  double s = 0.0;
  for (int64_t i = 0; i < t.size(); ++i) s += t[i];
  return s;
}

}  // namespace

PosteriorPass posterior_downward_pass(PassContext& ctx, const ModelSpec& spec,
                                      const Tensor& x, CounterRng* rng,
                                      const std::vector<Tensor>* fixed_noise) {
  Graph& g = *ctx.g;
  const Binding& b = *ctx.params;
  const int L = spec.levels();
  const int64_t batch = x.cols();

  std::vector<ApproxLikelihood> lik = likelihood_pass(ctx, spec, x);

  PosteriorPass pass;
  pass.batch = batch;
  pass.layers.resize(static_cast<size_t>(L) + 1);

  DiffValue kl_total;
  DiffValue z_prev;
  for (int j = 0; j <= L; ++j) {
    PosteriorLayerState& st = pass.layers[static_cast<size_t>(j)];
    if (j == 0) {
      st.prior_mu = g.tile_cols(b.at(names::top_mu), batch);
      st.prior_sigma = g.constant(Tensor::matrix(spec.width(0), batch, 1.0));
    } else {
      auto [mu, sigma] = prior_params(ctx, j, z_prev);
      st.prior_mu = mu;
      st.prior_sigma = sigma;
    }
    const ApproxLikelihood& l = lik[static_cast<size_t>(j)];
    MergedPosterior m =
        merge_op(g, st.prior_mu, st.prior_sigma, l.mu_tilde, l.sigma_tilde);
    st.mu_hat = m.mu_hat;
    st.sigma_hat = m.sigma_hat;
    st.kl_elems = build_rg_kl(g, st.mu_hat, st.sigma_hat, st.prior_mu,
                              st.prior_sigma);
    st.kl_mean = tensor_sum(st.kl_elems.value()) / static_cast<double>(batch);

    if (fixed_noise) {
      st.eps = fixed_noise->at(static_cast<size_t>(j));
      if (st.eps.rows() != spec.width(j) || st.eps.cols() != batch) {
        throw shape_error("posterior pass: fixed noise for layer " +
                          std::to_string(j) + " has shape " +
                          st.eps.shape_str());
      }
    } else {
      st.eps = Tensor::matrix(spec.width(j), batch);
      rng->fill_normal(st.eps);
    }
    st.z = g.max0(g.add(st.mu_hat, g.mul(st.sigma_hat, g.constant(st.eps))));
    z_prev = st.z;

    DiffValue layer_kl = g.sum(st.kl_elems);
    kl_total = (j == 0) ? layer_kl : g.add(kl_total, layer_kl);
  }

  pass.logits = decode_logits(ctx, z_prev);
  pass.recon_elems = bernoulli_loglik_elems(g, x, pass.logits);
  pass.recon_mean =
      tensor_sum(pass.recon_elems.value()) / static_cast<double>(batch);
  pass.bound_mean = g.scale(g.sub(g.sum(pass.recon_elems), kl_total),
                            1.0 / static_cast<double>(batch));
  return pass;
}

ElboParts elbo(PassContext& ctx, const ModelSpec& spec, const Tensor& x,
               CounterRng* rng, const std::vector<Tensor>* fixed_noise,
               PosteriorPass* pass_out) {
  PosteriorPass pass = posterior_downward_pass(ctx, spec, x, rng, fixed_noise);

  ElboParts parts;
  parts.bound = pass.bound_mean.value()[0];
  parts.recon = pass.recon_mean;
  for (const PosteriorLayerState& st : pass.layers) {
    parts.kl_layer.push_back(st.kl_mean);
  }
  if (!std::isfinite(parts.bound)) {
    for (size_t j = 0; j < pass.layers.size(); ++j) {
      const PosteriorLayerState& st = pass.layers[j];
      const char* what = nullptr;
      if (!st.prior_sigma.value().all_finite() ||
          !st.prior_mu.value().all_finite()) {
        what = "prior parameters";
      } else if (!st.mu_hat.value().all_finite() ||
                 !st.sigma_hat.value().all_finite()) {
        what = "merged posterior parameters";
      } else if (!st.kl_elems.value().all_finite()) {
        what = "KL terms";
      } else if (!st.z.value().all_finite()) {
        what = "sample";
      }
      if (what) {
        throw std::runtime_error("elbo: non-finite " + std::string(what) +
                                 " at layer " + std::to_string(j));
      }
    }
    throw std::runtime_error("elbo: non-finite reconstruction term");
  }
  if (pass_out) *pass_out = std::move(pass);
  return parts;
}

std::vector<double> is_log_weights(const ModelSpec& spec,
                                   const TensorMap& params,
                                   const TensorMap& bn_stats, double bn_eps,
                                   const Tensor& x, int64_t k_samples,
                                   CounterRng& rng) {
  if (k_samples < 1) {
    throw std::invalid_argument("is_loglik_estimate: K must be >= 1");
  }
  if (x.cols() != 1 || x.rows() != spec.data_dim) {
    throw shape_error("is_loglik_estimate: expected a single data column");
  }
  const int L = spec.levels();
  constexpr int64_t kChunk = 256;

  std::vector<double> w;
  w.reserve(static_cast<size_t>(k_samples));
  for (int64_t done = 0; done < k_samples; done += kChunk) {
    const int64_t b = std::min(kChunk, k_samples - done);
    Tensor xt = Tensor::matrix(spec.data_dim, b);
    for (int64_t i = 0; i < spec.data_dim; ++i) {
      for (int64_t j = 0; j < b; ++j) xt(i, j) = x[i];
    }
    Graph g;
    Binding bound = bind_params(g, params);
    TensorMap stats = bn_stats;
    PassContext ctx{&g, &bound, &stats, PassMode::kEval, bn_eps, 0.0};
    PosteriorPass pass = posterior_downward_pass(ctx, spec, xt, &rng);

    std::vector<double> wk(static_cast<size_t>(b), 0.0);
    for (int j = 0; j <= L; ++j) {
      const PosteriorLayerState& st = pass.layers[static_cast<size_t>(j)];
      const Tensor& z = st.z.value();
      const Tensor& pm = st.prior_mu.value();
      const Tensor& ps = st.prior_sigma.value();
      const Tensor& qm = st.mu_hat.value();
      const Tensor& qs = st.sigma_hat.value();
      for (int64_t i = 0; i < z.rows(); ++i) {
        for (int64_t c = 0; c < b; ++c) {
          const double zv = z(i, c);
          wk[static_cast<size_t>(c)] +=
              rg_log_density({pm(i, c), ps(i, c)}, zv) -
              rg_log_density({qm(i, c), qs(i, c)}, zv);
        }
      }
    }
    const Tensor& recon = pass.recon_elems.value();
    for (int64_t i = 0; i < recon.rows(); ++i) {
      for (int64_t c = 0; c < b; ++c) {
        wk[static_cast<size_t>(c)] += recon(i, c);
      }
    }
    w.insert(w.end(), wk.begin(), wk.end());
  }
  return w;
}

double is_loglik_estimate(const ModelSpec& spec, const TensorMap& params,
                          const TensorMap& bn_stats, double bn_eps,
                          const Tensor& x, int64_t k_samples,
                          CounterRng& rng) {
  const std::vector<double> w =
      is_log_weights(spec, params, bn_stats, bn_eps, x, k_samples, rng);
  double wmax = w[0];
  for (double v : w) wmax = std::max(wmax, v);
  double acc = 0.0;
  for (double v : w) acc += std::exp(v - wmax);
  return wmax + std::log(acc) -
         std::log(static_cast<double>(k_samples));
}

}  // namespace rgsvae
