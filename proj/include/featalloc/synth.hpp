#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "featalloc/dataset.hpp"
#include "featalloc/feature_matrix.hpp"
#include "featalloc/lfrm.hpp"
#include "featalloc/linear_gaussian.hpp"
#include "featalloc/prior.hpp"
#include "featalloc/pyclone.hpp"
#include "featalloc/rng.hpp"

namespace featalloc {

using ModelParams = std::variant<LinearGaussianParams, LfrmParams, PyCloneParams>;

ModelKind model_kind_of(const ModelParams& params);
std::size_t num_features(const ModelParams& params);

/// Builds the model for `params` over `data`; the alternatives must agree.
std::unique_ptr<Model> make_model(std::shared_ptr<const Dataset> data, const ModelParams& params);

/// Snapshot of a model's parameters.
ModelParams model_params(const Model& model);

/// Forward-simulation settings. `dims` is D for the linear Gaussian model and
/// the number of samples M for PyClone; the relational model ignores it.
/// Under the FBB prior the feature count is the prior's K and `alpha` is unused.
struct SimSpec {
  ModelKind model = ModelKind::LinearGaussian;
  PriorSpec prior = FbbPrior{20, 1.0, 1.0};
  std::size_t rows = 100;
  std::size_t dims = 10;
  double tau_v = 0.25;
  double tau_x = 25.0;
  double lfrm_tau = 0.25;
  bool symmetric = false;
  double a_v = 1.0;
  double b_v = 1.0;
  double mean_depth = 100.0;
  double missing_fraction = 0.0;
  std::uint64_t seed = 0;
  /// Replaces the prior draw of Z when set.
  std::optional<FeatureMatrix> z;
  /// Replaces the prior draw of the feature values (V, W or v, row-major) when set.
  std::optional<std::vector<double>> feature_values;
  std::size_t max_attempts = 100;

  /// Throws ValidationError on inconsistent settings.
  void validate() const;
};

struct SimResult {
  Dataset data;
  std::vector<HeldOutEntry> heldout;
  FeatureMatrix z;
  ModelParams params;
  PriorSpec prior;
  /// log p(X_obs, Z, θ) at the generating values.
  double log_density = 0.0;
};

/// Draws Z from the prior: per-column Beta then Bernoulli under FBB, the
/// sequential buffet under the IBP.
FeatureMatrix draw_feature_matrix(const PriorSpec& prior, std::size_t rows, Rng& rng);

SimResult simulate(const SimSpec& spec);

/// Masks floor(fraction * entries) entries chosen uniformly without
/// replacement. Masked values are zeroed and returned in row-major order.
std::vector<HeldOutEntry> mask_missing(Dataset& data, double fraction, Rng& rng);

/// Log joint at the generating values over the observed entries.
double generating_log_density(const SimResult& sim);

/// Data with the held-out entries restored and marked observed.
Dataset restore_heldout(const Dataset& data, const std::vector<HeldOutEntry>& heldout);

}  // namespace featalloc
