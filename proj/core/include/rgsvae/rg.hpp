#pragma once

#include <utility>

#include "rgsvae/special_math.hpp"

namespace rgsvae {

/// Per-unit (mu, sigma) pair of a Gaussian before rectification. Used for
/// priors, approximate likelihood terms and merged posteriors alike.
struct UnitGaussianParams {
  double mu;
  double sigma;
};

/// A standard normal draw feeding one rectified-Gaussian sample.
struct NoiseDraw {
  double epsilon;
};

/// z = max(mu + sigma * eps, 0). Deterministic in (p, e).
double rg_sample(const UnitGaussianParams& p, const NoiseDraw& e);

/// P(z = 0) = Phi(-mu / sigma).
double rg_mass_at_zero(const UnitGaussianParams& p);

/// E[max(mu + sigma*eps, 0)] = mu Phi(mu/sigma) + sigma phi(mu/sigma).
double rg_mean(const UnitGaussianParams& p);

/// KL divergence D[RG(q) || RG(p)]: the discrete point-mass term plus the
/// truncated-Gaussian term, both in closed form. Nonnegative up to roundoff;
/// values in (-1e-12, 0) are snapped to 0.
double rg_kl(const UnitGaussianParams& q, const UnitGaussianParams& p);

/// The two addends of the KL (point-mass term, truncated term) before the
/// snap-to-zero. Their sum equals rg_kl output up to the snap.
std::pair<double, double> rg_log_density_ratio_terms(
    const UnitGaussianParams& q, const UnitGaussianParams& p);

/// Mixture log-density of RG(p) at z: log mass at zero when z == 0, the
/// untruncated Gaussian log-density when z > 0.
double rg_log_density(const UnitGaussianParams& p, double z);

}  // namespace rgsvae
