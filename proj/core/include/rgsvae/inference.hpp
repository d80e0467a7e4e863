#pragma once

#include <optional>
#include <vector>

#include "rgsvae/model.hpp"
#include "rgsvae/rg.hpp"

namespace rgsvae {

/// Bottom-up approximate Gaussian likelihood term of one level.
struct ApproxLikelihood {
  DiffValue mu_tilde;
  DiffValue sigma_tilde;
};

/// Deterministic upward pass: approximate-likelihood parameters for every
/// level, indexed by level j = 0..L. The input x (columns = batch) plays the
/// role of the rectified input below the bottom level.
std::vector<ApproxLikelihood> likelihood_pass(PassContext& ctx,
                                              const ModelSpec& spec,
                                              const Tensor& x);

/// Precision-weighted product of a Gaussian prior and an approximate
/// Gaussian likelihood term (scalar form; the graph pass mirrors this
/// arithmetic exactly).
UnitGaussianParams merge_posterior(const UnitGaussianParams& prior,
                                   const UnitGaussianParams& lik);

/// Differentiable per-unit KL between RG(mu_hat, sigma_hat) and
/// RG(prior_mu, prior_sigma), elementwise over equal shapes. Bit-identical
/// to the scalar rg_kl.
DiffValue build_rg_kl(Graph& g, DiffValue mu_hat, DiffValue sigma_hat,
                      DiffValue prior_mu, DiffValue prior_sigma);

/// Per-layer record produced by the downward pass.
struct PosteriorLayerState {
  DiffValue prior_mu, prior_sigma;  // conditional prior of this level
  DiffValue mu_hat, sigma_hat;      // merged posterior parameters
  DiffValue kl_elems;               // analytic per-unit KL, [d_j x B]
  DiffValue z;                      // posterior sample, rectified
  Tensor eps;                       // the noise that produced z
  double kl_mean = 0.0;             // sum over units / batch, nats per image
};

struct PosteriorPass {
  std::vector<PosteriorLayerState> layers;
  DiffValue logits;
  DiffValue recon_elems;  // per-pixel Bernoulli log-likelihood terms
  DiffValue bound_mean;   // scalar ELBO estimate, nats per image
  double recon_mean = 0.0;
  int64_t batch = 0;
};

/// Downward pass over a batch: per level, merge the conditional prior with
/// the approximate likelihood, take the analytic KL, sample z and continue;
/// finally decode. Noise comes from `rng`, or from `fixed_noise` (one
/// [d_j x B] tensor per level) when supplied.
PosteriorPass posterior_downward_pass(
    PassContext& ctx, const ModelSpec& spec, const Tensor& x, CounterRng* rng,
    const std::vector<Tensor>* fixed_noise = nullptr);

struct ElboParts {
  double bound;
  double recon;
  std::vector<double> kl_layer;
};

/// Single-sample ELBO estimate with per-part breakdown. Throws with a
/// layer-naming diagnostic if anything went non-finite.
ElboParts elbo(PassContext& ctx, const ModelSpec& spec, const Tensor& x,
               CounterRng* rng,
               const std::vector<Tensor>* fixed_noise = nullptr,
               PosteriorPass* pass_out = nullptr);

/// Importance-sampled estimate of log p(x) for a single data vector
/// (data_dim x 1): log-mean-exp of K independent weights
/// w_k = log p(z_k, x) - log q(z_k | x), each computed along a fresh
/// downward pass in eval mode.
double is_loglik_estimate(const ModelSpec& spec, const TensorMap& params,
                          const TensorMap& bn_stats, double bn_eps,
                          const Tensor& x, int64_t k_samples, CounterRng& rng);

/// The raw importance weights behind is_loglik_estimate (for statistical
/// checks that need more than the reduced estimate).
std::vector<double> is_log_weights(const ModelSpec& spec,
                                   const TensorMap& params,
                                   const TensorMap& bn_stats, double bn_eps,
                                   const Tensor& x, int64_t k_samples,
                                   CounterRng& rng);

}  // namespace rgsvae
