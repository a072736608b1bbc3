#pragma once

#include <memory>
#include <vector>

#include "featalloc/model.hpp"

namespace featalloc {

struct PyCloneParams {
  std::size_t num_features = 0;
  std::size_t samples = 0;
  std::vector<double> v;       // K x M positive, row-major
  double error_rate = 0.01;    // ε: variant read probability when φ = 0
  double het_vaf = 0.5;        // η: variant read probability when φ = 1
  double a_v = 1.0;            // Gamma(a_v, b_v) prior on v_km
  double b_v = 1.0;
  double step = 0.5;           // log-scale random-walk scale

  double& at(std::size_t k, std::size_t m) { return v[k * samples + m]; }
  double at(std::size_t k, std::size_t m) const { return v[k * samples + m]; }
};

/// φ_nm = Σ_k z_nk f_km.
std::vector<double> pyclone_cellular_prevalence(std::span<const Bit> row,
                                                std::span<const double> f,
                                                std::size_t samples);

/// Feature-allocation variant of PyClone: b_nm ~ Binomial(d_nm, ε + (η - ε) φ_nm).
class PyCloneModel final : public Model {
 public:
  PyCloneModel(std::shared_ptr<const CountData> data, PyCloneParams params);

  static PyCloneParams draw_params(std::size_t num_features, std::size_t samples, double a_v,
                                   double b_v, Rng& rng);

  ModelKind kind() const override { return ModelKind::PyClone; }
  std::unique_ptr<Model> clone() const override;
  std::size_t num_features() const override { return params_.num_features; }
  std::size_t num_rows() const override { return data_->rows(); }

  std::unique_ptr<RowEvaluator> row_evaluator(std::size_t n,
                                              const FeatureMatrix& z) const override;
  double row_log_likelihood(std::size_t n, std::span<const Bit> row,
                            const FeatureMatrix& z) const override;
  double log_likelihood(const FeatureMatrix& z) const override;
  double log_prior() const override;
  /// Cycles the single-entry, whole-sample and permutation kernels.
  void update_parameters(const FeatureMatrix& z, Rng& rng) override;
  void append_features_from_prior(std::size_t count, Rng& rng) override;
  void remove_features(std::span<const std::size_t> cols) override;
  void permute_features(const Permutation& sigma) override;

  void update_v_single(const FeatureMatrix& z, Rng& rng);
  void update_v_block(const FeatureMatrix& z, Rng& rng);
  void update_v_permute(const FeatureMatrix& z, Rng& rng);

  /// Column-normalised proportions f (K x M).
  std::span<const double> proportions() const { return f_; }
  double variant_probability(double prevalence) const {
    return params_.error_rate + (params_.het_vaf - params_.error_rate) * prevalence;
  }

  const PyCloneParams& params() const { return params_; }
  const CountData& data() const { return *data_; }
  /// Log-likelihood of one observed entry at prevalence φ.
  double entry_log_likelihood(std::size_t n, std::size_t m, double prevalence) const;

 private:
  void recompute_proportions();
  double sample_log_likelihood(const FeatureMatrix& z, std::size_t m,
                               std::span<const double> column) const;
  bool accept_column(const FeatureMatrix& z, std::size_t m, std::span<const double> proposal,
                     double log_extra, Rng& rng);

  std::shared_ptr<const CountData> data_;
  PyCloneParams params_;
  std::vector<double> f_;
  std::shared_ptr<const std::vector<double>> log_choose_;  // N x M
};

}  // namespace featalloc
