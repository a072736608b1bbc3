#include "featalloc/prior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "featalloc/errors.hpp"
#include "featalloc/numeric.hpp"

namespace featalloc {

void validate(const PriorSpec& prior) {
  if (const auto* fbb = std::get_if<FbbPrior>(&prior)) {
    require(fbb->num_features >= 1, "FBB prior requires K >= 1");
    require(fbb->a > 0.0 && fbb->b > 0.0, "FBB prior requires a > 0 and b > 0");
  } else {
    require(std::get<IbpPrior>(prior).alpha > 0.0, "IBP prior requires alpha > 0");
  }
}

double fbb_log_pmf(const FeatureMatrix& z, const FbbPrior& prior) {
  validate(prior);
  if (z.cols() != prior.num_features) return kNegInf;
  const double n = static_cast<double>(z.rows());
  const double a = prior.a;
  const double b = prior.b;
  const double log_norm = log_gamma(a + b) - log_gamma(a) - log_gamma(b);
  double total = 0.0;
  for (std::size_t k = 0; k < z.cols(); ++k) {
    const double m = static_cast<double>(z.col_count(k));
    total += log_norm + log_gamma(m + a) + log_gamma(n - m + b) - log_gamma(n + a + b);
  }
  return total;
}

double ibp_log_pmf(const FeatureMatrix& z, const IbpPrior& prior) {
  validate(prior);
  const std::size_t n = z.rows();
  double harmonic = 0.0;
  for (std::size_t i = 1; i <= n; ++i) harmonic += 1.0 / static_cast<double>(i);
  const double k = static_cast<double>(z.cols());
  double total = k * std::log(prior.alpha) - log_gamma(k + 1.0) - prior.alpha * harmonic;
  const double dn = static_cast<double>(n);
  for (std::size_t j = 0; j < z.cols(); ++j) {
    const std::size_t m = z.col_count(j);
    require(m > 0, "ibp_log_pmf: empty column present");
    const double dm = static_cast<double>(m);
    total += log_gamma(dm) + log_gamma(dn - dm + 1.0) - log_gamma(dn + 1.0);
  }
  return total;
}

double log_pmf(const FeatureMatrix& z, const PriorSpec& prior) {
  return std::visit(
      [&](const auto& p) {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, FbbPrior>) {
          return fbb_log_pmf(z, p);
        } else {
          return ibp_log_pmf(z, p);
        }
      },
      prior);
}

double predictive_feature_prob(const PriorSpec& prior, std::size_t m_excl, std::size_t n_cond) {
  require(m_excl <= n_cond, "predictive_feature_prob: m_excl exceeds n_cond");
  const double m = static_cast<double>(m_excl);
  const double n = static_cast<double>(n_cond);
  if (const auto* fbb = std::get_if<FbbPrior>(&prior)) {
    return (m + fbb->a) / (n + fbb->a + fbb->b);
  }
  return m / (n + 1.0);
}

double predictive_log_pmf(const PriorSpec& prior, const FeatureMatrix& z,
                          std::span<const Bit> new_row, std::size_t n_new_singletons) {
  require(new_row.size() == z.cols(), "predictive_log_pmf: row length mismatch");
  const std::size_t n = z.rows();
  double total = 0.0;
  for (std::size_t k = 0; k < z.cols(); ++k) {
    total += log_bernoulli(new_row[k] != 0, predictive_feature_prob(prior, z.col_count(k), n));
  }
  if (const auto* ibp = std::get_if<IbpPrior>(&prior)) {
    total += log_poisson(static_cast<unsigned>(n_new_singletons),
                         ibp->alpha / static_cast<double>(n + 1));
  } else {
    require(n_new_singletons == 0, "predictive_log_pmf: FBB has no new features");
  }
  return total;
}

FeatureMatrix left_order_form(const FeatureMatrix& z) {
  std::vector<std::size_t> order(z.cols());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t lhs, std::size_t rhs) {
    for (std::size_t n = 0; n < z.rows(); ++n) {
      if (z(n, lhs) != z(n, rhs)) return z(n, lhs) > z(n, rhs);
    }
    return false;
  });
  return z.permute_cols(Permutation(std::move(order)));
}

FeatureRow complete_row(std::span<const Bit> prefix, std::span<const Bit> test_path,
                        const Permutation& sigma) {
  require(test_path.size() == sigma.size(), "complete_row: test path length mismatch");
  require(prefix.size() <= sigma.size(), "complete_row: prefix longer than K");
  FeatureRow row(test_path.begin(), test_path.end());
  for (std::size_t s = 0; s < prefix.size(); ++s) row[sigma(s)] = prefix[s];
  return row;
}

}  // namespace featalloc
