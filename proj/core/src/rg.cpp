#include "rgsvae/rg.hpp"

#include <cmath>
#include <stdexcept>

namespace rgsvae {

namespace {

void require_valid(const UnitGaussianParams& p, const char* who) {
  if (!std::isfinite(p.mu) || !std::isfinite(p.sigma)) {
    throw std::domain_error(std::string(who) + ": non-finite parameter");
  }
  if (!(p.sigma > 0.0)) {
    throw std::domain_error(std::string(who) + ": sigma must be > 0");
  }
}

// E_{q | z > 0}[log N(z; m, s^2)] given the truncated first/second moments
// (m1, m2) of the q side. s2 = s^2.
double truncated_gauss_logdens_expectation(double m1, double m2, double m,
                                           double s2) {
  const double quad = (m2 - (2.0 * m) * m1) + m * m;
  const double lognorm = -0.5 * std::log(s2 * kTwoPi);
  return lognorm - quad / (2.0 * s2);
}

}  // namespace

double rg_sample(const UnitGaussianParams& p, const NoiseDraw& e) {
  require_valid(p, "rg_sample");
  return std::max(p.mu + p.sigma * e.epsilon, 0.0);
}

double rg_mass_at_zero(const UnitGaussianParams& p) {
  require_valid(p, "rg_mass_at_zero");
  return std_normal_cdf(-(p.mu / p.sigma));
}

double rg_mean(const UnitGaussianParams& p) {
  require_valid(p, "rg_mean");
  const double r = p.mu / p.sigma;
  return p.mu * std_normal_cdf(r) + p.sigma * std_normal_pdf(r);
}

// The term-by-term evaluation sequence below is mirrored verbatim by the
// differentiable composition in inference.cpp (build_rg_kl); the two paths
// must stay bit-identical. Change one, change both.
std::pair<double, double> rg_log_density_ratio_terms(
    const UnitGaussianParams& q, const UnitGaussianParams& p) {
  require_valid(q, "rg_kl");
  require_valid(p, "rg_kl");

  const double aq = -(q.mu / q.sigma);
  const double ap = -(p.mu / p.sigma);
  const double log_q0 = std_normal_log_cdf(aq);
  const double log_p0 = std_normal_log_cdf(ap);
  const double mass_q0 = std_normal_cdf(aq);
  // 0 * log 0 := 0 when the q mass underflows entirely.
  const double discrete = mass_q0 * (log_q0 - log_p0);

  const double pos_mass = std_normal_cdf(-aq);
  const double lam = inv_mills(aq);
  const double m1 = q.mu + q.sigma * lam;
  const double sq2 = q.sigma * q.sigma;
  const double t = aq * (lam - aq);
  const double m2 = sq2 * (1.0 - t);
  const double e_logq = truncated_gauss_logdens_expectation(m1, m2, q.mu, sq2);
  const double sp2 = p.sigma * p.sigma;
  const double e_logp = truncated_gauss_logdens_expectation(m1, m2, p.mu, sp2);
  const double continuous = pos_mass * (e_logq - e_logp);
  return {discrete, continuous};
}

double rg_kl(const UnitGaussianParams& q, const UnitGaussianParams& p) {
  const auto [discrete, continuous] = rg_log_density_ratio_terms(q, p);
  double kl = discrete + continuous;
  if (kl < 0.0 && kl > -1e-12) kl = 0.0;
  return kl;
}

double rg_log_density(const UnitGaussianParams& p, double z) {
  require_valid(p, "rg_log_density");
  if (z == 0.0) return std_normal_log_cdf(-(p.mu / p.sigma));
  const double u = (z - p.mu) / p.sigma;
  return std_normal_log_pdf(u) - std::log(p.sigma);
}

}  // namespace rgsvae
