#pragma once

#include <functional>
#include <memory>
#include <span>

#include "featalloc/dataset.hpp"
#include "featalloc/feature_matrix.hpp"
#include "featalloc/rng.hpp"

namespace featalloc {

/// Incremental evaluator of log p(x_n | θ, z_n) for one row update.
///
/// A state is a fixed-size accumulator summarising a set of "on" features.
/// The row samplers build prefix states one feature at a time and combine
/// them with precomputed suffix states, so each likelihood evaluation costs
/// O(state_size) instead of O(K).
///
/// The evaluator borrows the model and feature matrix it was created from;
/// neither may change while it is alive.
class RowEvaluator {
 public:
  virtual ~RowEvaluator() = default;

  virtual std::size_t state_size() const = 0;
  /// Writes the state of the empty feature set.
  virtual void clear(std::span<double> state) const = 0;
  /// Turns feature `col` on (it must currently be off).
  virtual void add(std::span<double> state, std::size_t col) const = 0;
  /// State of the union of two disjoint feature sets. `out` must not alias.
  virtual void merge(std::span<double> out, std::span<const double> a,
                     std::span<const double> b) const = 0;
  virtual double log_likelihood(std::span<const double> state) const = 0;

  /// Builds the state of `row` from scratch and evaluates it.
  double evaluate(std::span<const Bit> row) const;
};

/// Evaluator of a constant (zero) log-likelihood.
class FlatEvaluator final : public RowEvaluator {
 public:
  std::size_t state_size() const override { return 0; }
  void clear(std::span<double>) const override {}
  void add(std::span<double>, std::size_t) const override {}
  void merge(std::span<double>, std::span<const double>, std::span<const double>) const override {}
  double log_likelihood(std::span<const double>) const override { return 0.0; }
};

/// Evaluator backed by an arbitrary function of the full row; the state holds
/// the row itself. O(K) per operation, intended for tests and small models.
class FunctionEvaluator final : public RowEvaluator {
 public:
  using Fn = std::function<double(std::span<const Bit>)>;
  FunctionEvaluator(std::size_t num_features, Fn fn) : k_(num_features), fn_(std::move(fn)) {}

  std::size_t state_size() const override { return k_; }
  void clear(std::span<double> state) const override;
  void add(std::span<double> state, std::size_t col) const override { state[col] = 1.0; }
  void merge(std::span<double> out, std::span<const double> a,
             std::span<const double> b) const override;
  double log_likelihood(std::span<const double> state) const override;

 private:
  std::size_t k_;
  Fn fn_;
};

/// Likelihood model over feature parameters θ. Holds the (read-only, shared)
/// dataset and the chain-local parameter state.
class Model {
 public:
  virtual ~Model() = default;

  virtual ModelKind kind() const = 0;
  virtual std::unique_ptr<Model> clone() const = 0;
  virtual std::size_t num_features() const = 0;
  virtual std::size_t num_rows() const = 0;

  /// Evaluator for row n; rows other than n are read from z.
  virtual std::unique_ptr<RowEvaluator> row_evaluator(std::size_t n,
                                                      const FeatureMatrix& z) const = 0;
  /// Direct log p(x_n | θ, row) with row n of z replaced by `row`.
  virtual double row_log_likelihood(std::size_t n, std::span<const Bit> row,
                                    const FeatureMatrix& z) const = 0;
  /// log p(X_obs | θ, Z).
  virtual double log_likelihood(const FeatureMatrix& z) const = 0;
  /// log density of θ and the model hyper-parameters under their priors.
  virtual double log_prior() const = 0;

  /// One sweep of the parameter kernels.
  virtual void update_parameters(const FeatureMatrix& z, Rng& rng) = 0;

  /// Appends features with parameters drawn from their prior.
  virtual void append_features_from_prior(std::size_t count, Rng& rng) = 0;
  virtual void remove_features(std::span<const std::size_t> cols) = 0;
  /// Reorders feature parameters so that new feature i is old feature σ(i).
  virtual void permute_features(const Permutation& sigma) = 0;

  /// When set, every likelihood term evaluates to zero (prior-recovery mode).
  void set_flat_likelihood(bool flat) { flat_ = flat; }
  bool flat_likelihood() const { return flat_; }

 protected:
  bool flat_ = false;
};

/// Log-scale random-walk MH for the IBP concentration with a Gamma(1, 1) prior.
double update_alpha(double alpha, const FeatureMatrix& z, Rng& rng, double step = 0.5);

/// Log target of update_alpha: log Gamma(alpha | 1, 1) + log p_IBP(Z | alpha).
double alpha_log_target(double alpha, const FeatureMatrix& z);

}  // namespace featalloc
