#pragma once

#include <memory>
#include <vector>

#include "featalloc/model.hpp"

namespace featalloc {

struct LinearGaussianHyper {
  double a_v = 1.0;
  double b_v = 1.0;
  double a_x = 1.0;
  double b_x = 1.0;
};

/// Feature parameters of the linear Gaussian model.
struct LinearGaussianParams {
  std::size_t num_features = 0;
  std::size_t dims = 0;
  std::vector<double> features;  // K x D, row-major; row k is v_k
  double tau_v = 1.0;            // precision of v_k
  double tau_x = 1.0;            // observation precision
  LinearGaussianHyper hyper;

  double& v(std::size_t k, std::size_t d) { return features[k * dims + d]; }
  double v(std::size_t k, std::size_t d) const { return features[k * dims + d]; }
};

/// x_n ~ Normal(Σ_k z_nk v_k, τ_x I), v_k ~ Normal(0, τ_v I), τ's Gamma.
class LinearGaussianModel final : public Model {
 public:
  LinearGaussianModel(std::shared_ptr<const RealData> data, LinearGaussianParams params);

  /// Parameters drawn from their priors given fixed precisions.
  static LinearGaussianParams draw_params(std::size_t num_features, std::size_t dims,
                                          double tau_v, double tau_x, Rng& rng,
                                          LinearGaussianHyper hyper = {});

  ModelKind kind() const override { return ModelKind::LinearGaussian; }
  std::unique_ptr<Model> clone() const override;
  std::size_t num_features() const override { return params_.num_features; }
  std::size_t num_rows() const override { return data_->rows; }

  std::unique_ptr<RowEvaluator> row_evaluator(std::size_t n,
                                              const FeatureMatrix& z) const override;
  double row_log_likelihood(std::size_t n, std::span<const Bit> row,
                            const FeatureMatrix& z) const override;
  double log_likelihood(const FeatureMatrix& z) const override;
  double log_prior() const override;
  void update_parameters(const FeatureMatrix& z, Rng& rng) override;
  void append_features_from_prior(std::size_t count, Rng& rng) override;
  void remove_features(std::span<const std::size_t> cols) override;
  void permute_features(const Permutation& sigma) override;

  /// Individual Gibbs kernels (update_parameters runs all three).
  void gibbs_update_features(const FeatureMatrix& z, Rng& rng);
  void gibbs_update_tau_v(Rng& rng);
  void gibbs_update_tau_x(const FeatureMatrix& z, Rng& rng);

  /// Σ_k z_nk v_kd.
  double reconstruct(std::span<const Bit> row, std::size_t d) const;

  const LinearGaussianParams& params() const { return params_; }
  LinearGaussianParams& mutable_params() { return params_; }
  const RealData& data() const { return *data_; }
  std::shared_ptr<const RealData> shared_data() const { return data_; }

 private:
  std::shared_ptr<const RealData> data_;
  LinearGaussianParams params_;
};

/// log of ∏_d Normal(residual_d | 0, 1/τ_x + count/τ_v): the row's marginal
/// likelihood when `count` private features are integrated out.
double lg_singleton_log_marginal(std::span<const double> residual, std::size_t count,
                                 double tau_v, double tau_x);

}  // namespace featalloc
