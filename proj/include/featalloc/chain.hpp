#pragma once

#include <memory>

#include "featalloc/feature_matrix.hpp"
#include "featalloc/model.hpp"
#include "featalloc/prior.hpp"
#include "featalloc/samplers.hpp"

namespace featalloc {

enum class SingletonUpdate { MetropolisHastings, CollapsedLinearGaussian };

std::string to_string(SingletonUpdate kind);
SingletonUpdate singleton_update_from_string(const std::string& name);

/// Latent state of one chain: allocation, model parameters and prior (the
/// IBP concentration lives in the prior).
struct ChainState {
  FeatureMatrix z;
  std::unique_ptr<Model> model;
  PriorSpec prior;

  ChainState() = default;
  ChainState(FeatureMatrix z_, std::unique_ptr<Model> model_, PriorSpec prior_);
  ChainState(const ChainState& other);
  ChainState& operator=(const ChainState& other);
  ChainState(ChainState&&) = default;
  ChainState& operator=(ChainState&&) = default;

  /// log p(Z) + log p(θ) + log p(X_obs | Z, θ).
  double log_joint() const;
};

/// Columns of z that only row n uses.
std::vector<std::size_t> singleton_columns(const FeatureMatrix& z, std::size_t n);

struct SingletonStats {
  std::size_t proposals = 0;
  std::size_t accepts = 0;
};

/// Replaces the singletons of row n by Poisson(α/N) fresh features with
/// parameters from their prior; accepted with the likelihood ratio.
bool update_singletons_mh(std::size_t n, ChainState& state, Rng& rng);

/// As update_singletons_mh but with the new feature values integrated out;
/// accepted features are then drawn from their Gaussian conditional.
/// Linear Gaussian model only.
bool update_singletons_collapsed_lg(std::size_t n, ChainState& state, Rng& rng);

/// Removes empty columns from z together with their parameters.
void prune_empty_features(ChainState& state);

struct SweepOptions {
  SamplerKind sampler = SamplerKind::ParticleGibbs;
  SamplerConfig config;
  bool update_parameters = true;
  bool update_alpha = true;
  SingletonUpdate singletons = SingletonUpdate::MetropolisHastings;
};

struct SweepStats {
  RowStats rows;
  SingletonStats singletons;
};

/// One sweep: every row in random order (with its singleton move under the
/// IBP), then the parameter kernels and, under the IBP, the α kernel.
void sweep(ChainState& state, const SweepOptions& options, Rng& rng, SweepStats* stats = nullptr);

}  // namespace featalloc
