#pragma once

#include <memory>
#include <vector>

#include "featalloc/model.hpp"

namespace featalloc {

struct LfrmParams {
  std::size_t num_features = 0;
  std::vector<double> weights;  // K x K, row-major: weights[k * K + l] = v_kl
  double tau = 1.0;             // precision of v_kl
  bool symmetric = false;
  double a = 1.0;               // Gamma(a, b) prior on tau
  double b = 1.0;
  double step = 0.5;            // random-walk scale (natural scale for v, log scale for tau)

  double& w(std::size_t k, std::size_t l) { return weights[k * num_features + l]; }
  double w(std::size_t k, std::size_t l) const { return weights[k * num_features + l]; }
};

/// Latent feature relational model: x_ij ~ Bernoulli(sigmoid(z_i' W z_j)).
class LfrmModel final : public Model {
 public:
  LfrmModel(std::shared_ptr<const RelationData> data, LfrmParams params);

  static LfrmParams draw_params(std::size_t num_features, double tau, bool symmetric, Rng& rng);

  ModelKind kind() const override { return ModelKind::Lfrm; }
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

  /// Random-walk MH over every free v_kl.
  void update_weights(const FeatureMatrix& z, Rng& rng);
  /// Log-scale random-walk MH on tau.
  void update_tau(Rng& rng);

  /// z_i' W z_j.
  double logit(std::span<const Bit> zi, std::span<const Bit> zj) const;

  const LfrmParams& params() const { return params_; }
  LfrmParams& mutable_params() { return params_; }
  const RelationData& data() const { return *data_; }

  std::size_t weight_proposals() const { return weight_proposals_; }
  std::size_t weight_accepts() const { return weight_accepts_; }

 private:
  std::shared_ptr<const RelationData> data_;
  LfrmParams params_;
  std::size_t weight_proposals_ = 0;
  std::size_t weight_accepts_ = 0;
};

}  // namespace featalloc
