#pragma once

#include <cstdint>
#include <string>

#include "rgsvae/rg.hpp"
#include "rgsvae/rng.hpp"

namespace rgsvae {

/// Outcome of one operator-invocable verification suite.
struct CheckResult {
  std::string name;
  bool pass = false;
  double worst = 0.0;  // worst-case statistic (SEs or relative error)
  std::string detail;
};

/// One draw of a standard normal conditioned on exceeding alpha. Naive
/// rejection for small alpha, exponential-proposal rejection in the tail.
double sample_truncated_std_normal(double alpha, CounterRng& rng);

struct McMoments {
  double m1, m2;    // sample means of z and z^2
  double se1, se2;  // standard errors of those means
};
/// Rejection-sampling estimate of the (0, inf)-truncated moments.
McMoments mc_truncated_moments(double mu, double sigma, int64_t n,
                               CounterRng& rng);

struct McEstimate {
  double mean, se;
};
/// Monte-Carlo KL estimate E_q[log q(z) / log p(z)] from rectified-Gaussian
/// samples and mixture log-densities.
McEstimate mc_rg_kl(const UnitGaussianParams& q, const UnitGaussianParams& p,
                    int64_t n, CounterRng& rng);

/// truncated_moments vs rejection-sampling MC on random parameter pairs
/// (mu = +/-20 tail cases forced in), 4 standard errors.
CheckResult check_truncated_moments(uint64_t seed, int pairs = 100,
                                    int64_t samples = 10'000'000);

/// Analytic rg_kl vs the MC estimator on random (q, p) pairs at 4 standard
/// errors; identical pairs must report KL <= 1e-10.
CheckResult check_kl_vs_mc(uint64_t seed, int pairs = 200,
                           int64_t samples = 1'000'000);

/// Reverse-mode ELBO gradients vs central finite differences (step 1e-5) on
/// a tiny model with frozen noise, kink-adjacent points excluded.
CheckResult check_elbo_gradients(uint64_t seed);

}  // namespace rgsvae
