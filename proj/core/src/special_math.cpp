#include "rgsvae/special_math.hpp"

#include <cmath>
#include <stdexcept>

namespace rgsvae {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;
// Below -kTailSwitch the CDF is evaluated by asymptotic expansion; the
// threshold sits where Phi(x) approaches the smallest normal double.
constexpr double kTailSwitch = 37.0;
}  // namespace

StandardizedPoint standardize(double mu, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(mu) || !std::isfinite(sigma)) {
    throw std::domain_error("standardize: requires finite mu and sigma > 0");
  }
  return StandardizedPoint{-mu / sigma};
}

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

double std_normal_log_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double std_normal_log_cdf(double x) {
  if (x >= -kTailSwitch) {
    if (x > 8.0) {
      // log(1 - Phi(-x)) without cancellation in the upper tail.
      return std::log1p(-0.5 * std::erfc(x * kInvSqrt2));
    }
    return std::log(0.5 * std::erfc(-x * kInvSqrt2));
  }
  // Phi(x) ~ phi(x)/(-x) * (1 - 1/x^2 + 3/x^4 - 15/x^6), x -> -inf.
  const double ix2 = 1.0 / (x * x);
  const double series = ix2 * (-1.0 + ix2 * (3.0 - 15.0 * ix2));
  return -0.5 * x * x - std::log(-x) - kLogSqrt2Pi + std::log1p(series);
}

double inv_mills(double a) {
  if (a > kTailSwitch) {
    // lambda(a) = a + 1/a - 2/a^3 + O(a^-5).
    const double ia = 1.0 / a;
    return a + ia * (1.0 - 2.0 * ia * ia);
  }
  return std::exp(std_normal_log_pdf(a) - std_normal_log_cdf(-a));
}

std::pair<double, double> truncated_moments(double mu, double sigma) {
  const double alpha = standardize(mu, sigma).alpha;
  const double lambda = inv_mills(alpha);
  // delta = lambda - alpha = E[(z - mu)/sigma | z > 0]; computed directly in
  // the deep tail where mu + sigma*lambda cancels.
  double m1;
  double delta;
  if (alpha > kTailSwitch) {
    const double ia = 1.0 / alpha;
    delta = ia * (1.0 - 2.0 * ia * ia);
    m1 = sigma * delta;
  } else {
    delta = lambda - alpha;
    m1 = mu + sigma * lambda;
  }
  // m2 = sigma^2 (1 + alpha lambda) + 2 mu m1 - mu^2, rearranged with
  // mu = -alpha sigma into the cancellation-free sigma^2 (1 - alpha delta).
  double m2 = sigma * sigma * (1.0 - alpha * delta);
  if (m2 < m1 * m1) m2 = m1 * m1;
  return {m1, m2};
}

}  // namespace rgsvae
