#pragma once

#include <span>
#include <vector>

#include "featalloc/dataset.hpp"
#include "featalloc/feature_matrix.hpp"
#include "featalloc/lfrm.hpp"
#include "featalloc/linear_gaussian.hpp"

namespace featalloc {

/// (ℓ - ℓ̂) / ℓ̂. Throws ContractViolation when ℓ̂ is zero.
double relative_log_density(double log_density, double reference);

/// Root mean squared difference; throws ContractViolation on empty or unequal inputs.
double rmse(std::span<const double> predictions, std::span<const double> truth);

/// RMSE of Σ_k z_nk v_k against the held-out values.
double rmse_heldout(const LinearGaussianParams& params, const FeatureMatrix& z,
                    std::span<const HeldOutEntry> heldout);

/// Fraction of the N² entries where 1{σ(z_i' W z_j) > 0.5} differs from x_ij.
/// Every entry of `complete` must be observed.
double lfrm_reconstruction_error(const LfrmParams& params, const FeatureMatrix& z,
                                 const RelationData& complete);

/// Same, with the held-out entries of `data` filled back in first.
double lfrm_reconstruction_error(const LfrmParams& params, const FeatureMatrix& z,
                                 const RelationData& data, std::span<const HeldOutEntry> heldout);

struct BCubed {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

/// Extended B-Cubed for overlapping allocations. With R and G the numbers of
/// inferred and true features shared by an ordered pair (self-pairs included),
/// precision averages min(R, G) / R over pairs with R > 0 and recall averages
/// min(R, G) / G over pairs with G > 0. An empty average counts as 0.
BCubed bcubed_fmeasure(const FeatureMatrix& inferred, const FeatureMatrix& truth);

/// Scores indexed [method][block].
using ScoreTable = std::vector<std::vector<double>>;

/// Within-block ranks (1 = smallest score, ties averaged), indexed [method][block].
ScoreTable block_ranks(const ScoreTable& scores);

std::vector<double> mean_ranks(const ScoreTable& scores);

struct FriedmanResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Friedman chi-square with the tie correction, k - 1 degrees of freedom.
/// A table tied within every block gives statistic 0 and p = 1.
FriedmanResult friedman_test(const ScoreTable& scores);

/// Pairwise two-sided z tests on mean rank differences with standard error
/// sqrt(k(k+1)/(6n)), Bonferroni-adjusted over the k(k-1)/2 pairs and capped
/// at 1. Symmetric with a unit diagonal.
std::vector<std::vector<double>> nemenyi_posthoc(const ScoreTable& scores);

}  // namespace featalloc
