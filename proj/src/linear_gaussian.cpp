#include "featalloc/linear_gaussian.hpp"

#include <algorithm>
#include <cmath>

#include "featalloc/errors.hpp"
#include "featalloc/numeric.hpp"

namespace featalloc {

namespace {

class LinearGaussianEvaluator final : public RowEvaluator {
 public:
  LinearGaussianEvaluator(const LinearGaussianModel& model, std::size_t n)
      : params_(model.params()),
        x_(model.data().values.data() + n * model.data().cols),
        observed_(model.data().observed.data() + n * model.data().cols),
        flat_(model.flat_likelihood()) {
    std::size_t count = 0;
    for (std::size_t d = 0; d < params_.dims; ++d) count += observed_[d] != 0;
    log_const_ = 0.5 * static_cast<double>(count) * (std::log(params_.tau_x) - kLogTwoPi);
  }

  std::size_t state_size() const override { return params_.dims; }
  void clear(std::span<double> state) const override {
    std::fill(state.begin(), state.end(), 0.0);
  }
  void add(std::span<double> state, std::size_t col) const override {
    const double* v = params_.features.data() + col * params_.dims;
    for (std::size_t d = 0; d < params_.dims; ++d) state[d] += v[d];
  }
  void merge(std::span<double> out, std::span<const double> a,
             std::span<const double> b) const override {
    for (std::size_t d = 0; d < params_.dims; ++d) out[d] = a[d] + b[d];
  }
  double log_likelihood(std::span<const double> mean) const override {
    if (flat_) return 0.0;
    double sq = 0.0;
    for (std::size_t d = 0; d < params_.dims; ++d) {
      if (observed_[d]) {
        const double r = x_[d] - mean[d];
        sq += r * r;
      }
    }
    return log_const_ - 0.5 * params_.tau_x * sq;
  }

 private:
  const LinearGaussianParams& params_;
  const double* x_;
  const std::uint8_t* observed_;
  bool flat_;
  double log_const_ = 0.0;
};

}  // namespace

LinearGaussianModel::LinearGaussianModel(std::shared_ptr<const RealData> data,
                                         LinearGaussianParams params)
    : data_(std::move(data)), params_(std::move(params)) {
  require(data_ != nullptr, "LinearGaussianModel: null dataset");
  require(params_.dims == data_->cols, "LinearGaussianModel: dimension mismatch");
  require(params_.features.size() == params_.num_features * params_.dims,
          "LinearGaussianModel: feature matrix size mismatch");
  require(params_.tau_v > 0.0 && params_.tau_x > 0.0,
          "LinearGaussianModel: precisions must be positive");
}

LinearGaussianParams LinearGaussianModel::draw_params(std::size_t num_features, std::size_t dims,
                                                      double tau_v, double tau_x, Rng& rng,
                                                      LinearGaussianHyper hyper) {
  LinearGaussianParams p;
  p.num_features = num_features;
  p.dims = dims;
  p.tau_v = tau_v;
  p.tau_x = tau_x;
  p.hyper = hyper;
  p.features.resize(num_features * dims);
  const double sd = 1.0 / std::sqrt(tau_v);
  for (double& v : p.features) v = rng.normal(0.0, sd);
  return p;
}

std::unique_ptr<Model> LinearGaussianModel::clone() const {
  return std::make_unique<LinearGaussianModel>(*this);
}

std::unique_ptr<RowEvaluator> LinearGaussianModel::row_evaluator(std::size_t n,
                                                                 const FeatureMatrix&) const {
  return std::make_unique<LinearGaussianEvaluator>(*this, n);
}

double LinearGaussianModel::reconstruct(std::span<const Bit> row, std::size_t d) const {
  double mean = 0.0;
  for (std::size_t k = 0; k < params_.num_features; ++k) {
    if (row[k]) mean += params_.v(k, d);
  }
  return mean;
}

double LinearGaussianModel::row_log_likelihood(std::size_t n, std::span<const Bit> row,
                                               const FeatureMatrix&) const {
  require(row.size() == params_.num_features, "lg_log_likelihood_row: row length mismatch");
  if (flat_) return 0.0;
  double total = 0.0;
  for (std::size_t d = 0; d < params_.dims; ++d) {
    if (!data_->is_observed(n, d)) continue;
    total += log_normal_density(data_->at(n, d), reconstruct(row, d), params_.tau_x);
  }
  return total;
}

double LinearGaussianModel::log_likelihood(const FeatureMatrix& z) const {
  double total = 0.0;
  for (std::size_t n = 0; n < data_->rows; ++n) total += row_log_likelihood(n, z.row(n), z);
  return total;
}

double LinearGaussianModel::log_prior() const {
  const auto& h = params_.hyper;
  double total = log_gamma_density(params_.tau_v, h.a_v, h.b_v) +
                 log_gamma_density(params_.tau_x, h.a_x, h.b_x);
  for (double v : params_.features) total += log_normal_density(v, 0.0, params_.tau_v);
  return total;
}

void LinearGaussianModel::gibbs_update_features(const FeatureMatrix& z, Rng& rng) {
  const std::size_t n_rows = data_->rows;
  const std::size_t dims = params_.dims;
  const std::size_t k_total = params_.num_features;
  require(z.cols() == k_total, "gibbs_update_features: column mismatch");
  if (flat_) {
    const double sd = 1.0 / std::sqrt(params_.tau_v);
    for (double& v : params_.features) v = rng.normal(0.0, sd);
    return;
  }
  // Residuals X - ZV on observed entries.
  std::vector<double> residual(n_rows * dims, 0.0);
  for (std::size_t n = 0; n < n_rows; ++n) {
    for (std::size_t d = 0; d < dims; ++d) {
      if (data_->is_observed(n, d)) residual[n * dims + d] = data_->at(n, d) - reconstruct(z.row(n), d);
    }
  }
  for (std::size_t k = 0; k < k_total; ++k) {
    for (std::size_t d = 0; d < dims; ++d) {
      const double old = params_.v(k, d);
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t n = 0; n < n_rows; ++n) {
        if (z(n, k) && data_->is_observed(n, d)) {
          sum += residual[n * dims + d] + old;
          ++count;
        }
      }
      const double precision = params_.tau_v + params_.tau_x * static_cast<double>(count);
      const double mean = params_.tau_x * sum / precision;
      const double fresh = rng.normal(mean, 1.0 / std::sqrt(precision));
      params_.v(k, d) = fresh;
      for (std::size_t n = 0; n < n_rows; ++n) {
        if (z(n, k) && data_->is_observed(n, d)) residual[n * dims + d] += old - fresh;
      }
    }
  }
}

void LinearGaussianModel::gibbs_update_tau_v(Rng& rng) {
  double sq = 0.0;
  for (double v : params_.features) sq += v * v;
  const double shape = params_.hyper.a_v + 0.5 * static_cast<double>(params_.features.size());
  const double rate = params_.hyper.b_v + 0.5 * sq;
  params_.tau_v = rng.gamma(shape, rate);
}

void LinearGaussianModel::gibbs_update_tau_x(const FeatureMatrix& z, Rng& rng) {
  if (flat_) {
    params_.tau_x = rng.gamma(params_.hyper.a_x, params_.hyper.b_x);
    return;
  }
  double sq = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < data_->rows; ++n) {
    for (std::size_t d = 0; d < params_.dims; ++d) {
      if (!data_->is_observed(n, d)) continue;
      const double r = data_->at(n, d) - reconstruct(z.row(n), d);
      sq += r * r;
      ++count;
    }
  }
  const double shape = params_.hyper.a_x + 0.5 * static_cast<double>(count);
  const double rate = params_.hyper.b_x + 0.5 * sq;
  params_.tau_x = rng.gamma(shape, rate);
}

void LinearGaussianModel::update_parameters(const FeatureMatrix& z, Rng& rng) {
  gibbs_update_features(z, rng);
  gibbs_update_tau_v(rng);
  gibbs_update_tau_x(z, rng);
}

void LinearGaussianModel::append_features_from_prior(std::size_t count, Rng& rng) {
  const double sd = 1.0 / std::sqrt(params_.tau_v);
  for (std::size_t i = 0; i < count * params_.dims; ++i) {
    params_.features.push_back(rng.normal(0.0, sd));
  }
  params_.num_features += count;
}

void LinearGaussianModel::remove_features(std::span<const std::size_t> cols) {
  if (cols.empty()) return;
  std::vector<char> drop(params_.num_features, 0);
  for (std::size_t k : cols) {
    require(k < params_.num_features, "remove_features: bad index");
    drop[k] = 1;
  }
  std::vector<double> kept;
  kept.reserve(params_.features.size());
  for (std::size_t k = 0; k < params_.num_features; ++k) {
    if (drop[k]) continue;
    kept.insert(kept.end(), params_.features.begin() + k * params_.dims,
                params_.features.begin() + (k + 1) * params_.dims);
  }
  params_.features = std::move(kept);
  params_.num_features -= cols.size();
}

void LinearGaussianModel::permute_features(const Permutation& sigma) {
  require(sigma.size() == params_.num_features, "permute_features: size mismatch");
  std::vector<double> out(params_.features.size());
  for (std::size_t k = 0; k < params_.num_features; ++k) {
    std::copy_n(params_.features.begin() + sigma(k) * params_.dims, params_.dims,
                out.begin() + k * params_.dims);
  }
  params_.features = std::move(out);
}

double lg_singleton_log_marginal(std::span<const double> residual, std::size_t count,
                                 double tau_v, double tau_x) {
  const double variance = 1.0 / tau_x + static_cast<double>(count) / tau_v;
  double total = 0.0;
  for (double r : residual) total += log_normal_density(r, 0.0, 1.0 / variance);
  return total;
}

}  // namespace featalloc
