#include "featalloc/numeric.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "featalloc/errors.hpp"

namespace featalloc {

double log_gamma(double x) { return boost::math::lgamma(x); }

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return kNegInf;
  const double top = *std::max_element(values.begin(), values.end());
  if (top == kNegInf) return kNegInf;
  if (std::isinf(top)) return top;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - top);
  return top + std::log(acc);
}

double normalize_log_weights(std::span<const double> log_weights, std::span<double> out) {
  require(out.size() == log_weights.size(), "normalize_log_weights: size mismatch");
  const double norm = log_sum_exp(log_weights);
  if (!std::isfinite(norm)) throw DegenerateSupportError("all particle weights are zero");
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(log_weights[i] - norm);
    total += out[i];
  }
  for (double& w : out) w /= total;
  return norm;
}

double log_poisson(unsigned k, double rate) {
  if (rate == 0.0) return k == 0 ? 0.0 : kNegInf;
  return k * std::log(rate) - rate - log_gamma(k + 1.0);
}

double log_gamma_density(double x, double shape, double rate) {
  if (x <= 0.0) return kNegInf;
  return shape * std::log(rate) - log_gamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double log_normal_density(double x, double mean, double precision) {
  const double d = x - mean;
  return 0.5 * (std::log(precision) - kLogTwoPi) - 0.5 * precision * d * d;
}

double log_binomial_coefficient(unsigned n, unsigned k) {
  return log_gamma(n + 1.0) - log_gamma(k + 1.0) - log_gamma(n - k + 1.0);
}

double chi_square_sf(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<>(dof), x));
}

double normal_sf(double z) {
  return boost::math::cdf(boost::math::complement(boost::math::normal_distribution<>(), z));
}

double gamma_cdf(double x, double shape, double rate) {
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(shape, x * rate);
}

double normal_cdf(double x, double mean, double sd) {
  return boost::math::cdf(boost::math::normal_distribution<>(mean, sd), x);
}

}  // namespace featalloc
