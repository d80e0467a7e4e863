#pragma once

#include <utility>

namespace rgsvae {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;
inline constexpr double kSqrt2Pi = 2.5066282746310005024157652848110;
inline constexpr double kTwoPi = 6.2831853071795864769252867665590;

/// Standardized truncation point alpha = -mu / sigma of a Gaussian
/// truncated at zero.
struct StandardizedPoint {
  double alpha;
};

StandardizedPoint standardize(double mu, double sigma);

/// phi(x) = exp(-x^2/2) / sqrt(2 pi).
double std_normal_pdf(double x);

/// log phi(x) = -x^2/2 - log sqrt(2 pi).
double std_normal_log_pdf(double x);

/// Phi(x), evaluated through an erfc kernel; absolute error <= 1e-12
/// over |x| <= 8.
double std_normal_cdf(double x);

/// log Phi(x). Direct for x >= -37, asymptotic tail expansion below that
/// (relative error <= 1e-8 in the tail; in practice much tighter).
double std_normal_log_cdf(double x);

/// Inverse Mills ratio / hazard lambda(a) = phi(a) / (1 - Phi(a)).
/// Evaluated in log space; switches to the asymptotic form for a > 37.
double inv_mills(double a);

/// First and second moments of z ~ N(mu, sigma^2) conditioned on z > 0:
/// m1 = E[z | z > 0], m2 = E[z^2 | z > 0]. Guarantees m1 > 0, m2 >= m1^2.
/// Rejects sigma <= 0.
std::pair<double, double> truncated_moments(double mu, double sigma);

}  // namespace rgsvae
