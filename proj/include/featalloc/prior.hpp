#pragma once

#include <cstddef>
#include <span>
#include <variant>

#include "featalloc/feature_matrix.hpp"

namespace featalloc {

/// Finite Beta-Bernoulli prior with a fixed number of features.
struct FbbPrior {
  std::size_t num_features = 1;
  double a = 1.0;
  double b = 1.0;
};

/// Indian buffet process (exchangeable feature probability function form).
struct IbpPrior {
  double alpha = 1.0;
};

using PriorSpec = std::variant<FbbPrior, IbpPrior>;

/// Throws ContractViolation unless a > 0, b > 0, K >= 1 (FBB) or alpha > 0 (IBP).
void validate(const PriorSpec& prior);

inline bool is_ibp(const PriorSpec& prior) { return std::holds_alternative<IbpPrior>(prior); }

/// log p(Z) under FBB. Includes the per-feature Beta normaliser, so the pmf sums
/// to one for every (a, b). -inf when Z does not have exactly K columns.
double fbb_log_pmf(const FeatureMatrix& z, const FbbPrior& prior);

/// log p(Z) under the IBP: alpha^K / K! exp(-alpha H_N) prod Γ(m)Γ(N-m+1)/Γ(N+1).
/// Z must not contain empty columns.
double ibp_log_pmf(const FeatureMatrix& z, const IbpPrior& prior);

double log_pmf(const FeatureMatrix& z, const PriorSpec& prior);

/// Probability that a new data point uses a feature shared by `m_excl` of the
/// `n_cond` conditioned points.
double predictive_feature_prob(const PriorSpec& prior, std::size_t m_excl, std::size_t n_cond);

/// log p(new row | f_N): product of Bernoulli terms over the existing columns,
/// plus a Poisson(alpha / (N + 1)) term on the singleton count under the IBP.
double predictive_log_pmf(const PriorSpec& prior, const FeatureMatrix& z,
                          std::span<const Bit> new_row, std::size_t n_new_singletons);

/// Canonical column order: columns read as big-endian binary numbers (row 0
/// most significant) in decreasing order, ties kept in original order.
FeatureMatrix left_order_form(const FeatureMatrix& z);

/// Row whose entries at σ(0..t-1) are the sampled prefix and whose remaining
/// entries come from `test_path`, in original feature order. `test_path` is
/// indexed by feature.
FeatureRow complete_row(std::span<const Bit> prefix, std::span<const Bit> test_path,
                        const Permutation& sigma);

}  // namespace featalloc
