#include "featalloc/model.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "featalloc/errors.hpp"
#include "featalloc/numeric.hpp"
#include "featalloc/prior.hpp"

namespace featalloc {

double RowEvaluator::evaluate(std::span<const Bit> row) const {
  std::vector<double> state(state_size());
  clear(state);
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (row[k]) add(state, k);
  }
  return log_likelihood(state);
}

void FunctionEvaluator::clear(std::span<double> state) const {
  std::fill(state.begin(), state.end(), 0.0);
}

void FunctionEvaluator::merge(std::span<double> out, std::span<const double> a,
                              std::span<const double> b) const {
  for (std::size_t k = 0; k < k_; ++k) out[k] = (a[k] != 0.0 || b[k] != 0.0) ? 1.0 : 0.0;
}

double FunctionEvaluator::log_likelihood(std::span<const double> state) const {
  FeatureRow row(k_);
  for (std::size_t k = 0; k < k_; ++k) row[k] = state[k] != 0.0;
  return fn_(row);
}

double alpha_log_target(double alpha, const FeatureMatrix& z) {
  if (alpha <= 0.0) return kNegInf;
  return log_gamma_density(alpha, 1.0, 1.0) + ibp_log_pmf(z, IbpPrior{alpha});
}

double update_alpha(double alpha, const FeatureMatrix& z, Rng& rng, double step) {
  require(alpha > 0.0, "update_alpha: alpha must be positive");
  const double proposal = alpha * std::exp(step * rng.normal());
  // Log-scale walk: the Jacobian contributes log(proposal / alpha).
  const double log_ratio = alpha_log_target(proposal, z) - alpha_log_target(alpha, z) +
                           std::log(proposal) - std::log(alpha);
  return std::log(rng.uniform()) < log_ratio ? proposal : alpha;
}

}  // namespace featalloc
