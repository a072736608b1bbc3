#pragma once

// Independent reference computations shared by the unit and acceptance tests.
// These deliberately avoid the library's incremental evaluators and predictive
// helpers so that they can serve as oracles for them.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include "featalloc/dataset.hpp"
#include "featalloc/feature_matrix.hpp"
#include "featalloc/linear_gaussian.hpp"
#include "featalloc/numeric.hpp"
#include "featalloc/rng.hpp"

namespace featalloc::testing {

struct LgInstance {
  std::shared_ptr<RealData> data;
  FeatureMatrix z;
  std::unique_ptr<LinearGaussianModel> model;
};

/// Random LG dataset with Bernoulli(0.5) allocation and prior feature values.
inline LgInstance make_lg_instance(std::size_t rows, std::size_t dims, std::size_t features,
                                   double tau_v, double tau_x, std::uint64_t seed) {
  Rng rng(seed);
  LgInstance inst;
  inst.z = FeatureMatrix(rows, features);
  for (std::size_t n = 0; n < rows; ++n) {
    for (std::size_t k = 0; k < features; ++k) inst.z.set(n, k, rng.bernoulli(0.5));
  }
  auto params = LinearGaussianModel::draw_params(features, dims, tau_v, tau_x, rng);
  inst.data = std::make_shared<RealData>(rows, dims);
  for (std::size_t n = 0; n < rows; ++n) {
    for (std::size_t d = 0; d < dims; ++d) {
      double mean = 0.0;
      for (std::size_t k = 0; k < features; ++k) mean += inst.z(n, k) * params.v(k, d);
      inst.data->at(n, d) = rng.normal(mean, 1.0 / std::sqrt(tau_x));
    }
  }
  inst.model = std::make_unique<LinearGaussianModel>(inst.data, params);
  return inst;
}

/// Exact p(z_n | x_n, Z^{-n}, θ) under FBB(K, a, b) by brute force: the Gaussian
/// density is written out directly and the predictive is counted from z.
inline std::vector<double> lg_fbb_row_posterior(const LinearGaussianModel& model,
                                                const FeatureMatrix& z, std::size_t n, double a,
                                                double b) {
  const auto& p = model.params();
  const auto& x = model.data();
  const std::size_t k_total = z.cols();
  std::vector<double> rho(k_total);
  for (std::size_t k = 0; k < k_total; ++k) {
    double m = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) {
      if (i != n) m += z(i, k);
    }
    rho[k] = (m + a) / (static_cast<double>(z.rows()) - 1.0 + a + b);
  }
  std::vector<double> logp(std::size_t{1} << k_total);
  for (std::size_t s = 0; s < logp.size(); ++s) {
    double lp = 0.0;
    for (std::size_t k = 0; k < k_total; ++k) {
      const bool on = (s >> k) & 1U;
      lp += on ? std::log(rho[k]) : std::log(1.0 - rho[k]);
    }
    for (std::size_t d = 0; d < p.dims; ++d) {
      if (!x.is_observed(n, d)) continue;
      double mean = 0.0;
      for (std::size_t k = 0; k < k_total; ++k) {
        if ((s >> k) & 1U) mean += p.v(k, d);
      }
      const double r = x.at(n, d) - mean;
      lp += 0.5 * std::log(p.tau_x / (2.0 * M_PI)) - 0.5 * p.tau_x * r * r;
    }
    logp[s] = lp;
  }
  const double mx = *std::max_element(logp.begin(), logp.end());
  double total = 0.0;
  for (double v : logp) total += std::exp(v - mx);
  std::vector<double> probs(logp.size());
  for (std::size_t s = 0; s < logp.size(); ++s) probs[s] = std::exp(logp[s] - mx) / total;
  return probs;
}

inline std::size_t row_index(std::span<const Bit> row) {
  std::size_t s = 0;
  for (std::size_t k = 0; k < row.size(); ++k) s |= static_cast<std::size_t>(row[k] != 0) << k;
  return s;
}

inline double total_variation(const std::vector<double>& counts, const std::vector<double>& probs) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  double tv = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) tv += std::abs(counts[i] / total - probs[i]);
  return 0.5 * tv;
}

/// Pearson goodness-of-fit p-value; cells with expected count below 5 are pooled.
inline double chi_square_gof_p(const std::vector<double>& counts, const std::vector<double>& probs) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  double stat = 0.0;
  double pooled_obs = 0.0;
  double pooled_exp = 0.0;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double expected = total * probs[i];
    if (expected < 5.0) {
      pooled_obs += counts[i];
      pooled_exp += expected;
      continue;
    }
    stat += (counts[i] - expected) * (counts[i] - expected) / expected;
    ++cells;
  }
  if (pooled_exp > 0.0) {
    stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    ++cells;
  }
  if (cells < 2) return 1.0;
  return chi_square_sf(stat, static_cast<double>(cells - 1));
}

/// One-sample Kolmogorov-Smirnov statistic sqrt(n) * D against `cdf`.
template <typename Cdf>
double ks_scaled_statistic(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n),
                  std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return std::sqrt(n) * d;
}

/// sqrt(n) D exceeds this with probability 0.0027 (the 3σ tail) under the null.
inline constexpr double kKsThreeSigma = 1.818;

}  // namespace featalloc::testing
