#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace featalloc {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLogTwoPi = 1.8378770664093454836;

/// Lanczos log-gamma (thread safe, unlike std::lgamma which writes signgam).
double log_gamma(double x);

/// log(exp(a) + exp(b)) without overflow.
inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

double log_sum_exp(std::span<const double> values);

/// Normalises log weights in place into probabilities; returns the log normaliser.
double normalize_log_weights(std::span<const double> log_weights, std::span<double> out);

/// log(1 + exp(x)).
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double log_bernoulli(bool z, double p) { return z ? std::log(p) : std::log1p(-p); }

/// log Bernoulli(x | sigmoid(logit)).
inline double log_bernoulli_logit(bool x, double logit) {
  return x ? -softplus(-logit) : -softplus(logit);
}

double log_poisson(unsigned k, double rate);
double log_gamma_density(double x, double shape, double rate);
double log_normal_density(double x, double mean, double precision);
double log_binomial_coefficient(unsigned n, unsigned k);

/// Upper tail of the chi-square distribution.
double chi_square_sf(double x, double dof);
/// Upper tail of the standard normal distribution.
double normal_sf(double z);
/// Gamma(shape, rate) cumulative distribution.
double gamma_cdf(double x, double shape, double rate);
double normal_cdf(double x, double mean, double sd);

}  // namespace featalloc
