#include "featalloc/pyclone.hpp"

#include <algorithm>
#include <cmath>

#include "featalloc/errors.hpp"
#include "featalloc/numeric.hpp"

namespace featalloc {

namespace {

class PyCloneEvaluator final : public RowEvaluator {
 public:
  PyCloneEvaluator(const PyCloneModel& model, std::size_t n) : model_(model), n_(n) {}

  std::size_t state_size() const override { return model_.params().samples; }
  void clear(std::span<double> state) const override {
    std::fill(state.begin(), state.end(), 0.0);
  }
  void add(std::span<double> state, std::size_t col) const override {
    const std::size_t m_total = model_.params().samples;
    const double* f = model_.proportions().data() + col * m_total;
    for (std::size_t m = 0; m < m_total; ++m) state[m] += f[m];
  }
  void merge(std::span<double> out, std::span<const double> a,
             std::span<const double> b) const override {
    for (std::size_t m = 0; m < out.size(); ++m) out[m] = a[m] + b[m];
  }
  double log_likelihood(std::span<const double> phi) const override {
    if (model_.flat_likelihood()) return 0.0;
    double total = 0.0;
    for (std::size_t m = 0; m < phi.size(); ++m) {
      if (model_.data().is_observed(n_, m)) total += model_.entry_log_likelihood(n_, m, phi[m]);
    }
    return total;
  }

 private:
  const PyCloneModel& model_;
  std::size_t n_;
};

}  // namespace

std::vector<double> pyclone_cellular_prevalence(std::span<const Bit> row,
                                                std::span<const double> f,
                                                std::size_t samples) {
  require(f.size() == row.size() * samples, "pyclone_cellular_prevalence: shape mismatch");
  std::vector<double> phi(samples, 0.0);
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (!row[k]) continue;
    for (std::size_t m = 0; m < samples; ++m) phi[m] += f[k * samples + m];
  }
  return phi;
}

PyCloneModel::PyCloneModel(std::shared_ptr<const CountData> data, PyCloneParams params)
    : data_(std::move(data)), params_(std::move(params)) {
  require(data_ != nullptr, "PyCloneModel: null dataset");
  require(params_.samples == data_->cols(), "PyCloneModel: sample count mismatch");
  require(params_.v.size() == params_.num_features * params_.samples,
          "PyCloneModel: parameter size mismatch");
  require(std::all_of(params_.v.begin(), params_.v.end(), [](double x) { return x > 0.0; }),
          "PyCloneModel: v must be positive");
  require(params_.error_rate > 0.0 && params_.error_rate < 1.0 && params_.het_vaf > 0.0 &&
              params_.het_vaf < 1.0,
          "PyCloneModel: read probabilities must lie in (0, 1)");
  auto choose = std::make_shared<std::vector<double>>(data_->rows() * data_->cols(), 0.0);
  for (std::size_t n = 0; n < data_->rows(); ++n) {
    for (std::size_t m = 0; m < data_->cols(); ++m) {
      const int b = data_->variant_reads.at(n, m);
      const int d = data_->depth.at(n, m);
      if (data_->is_observed(n, m)) {
        (*choose)[n * data_->cols() + m] =
            log_binomial_coefficient(static_cast<unsigned>(d), static_cast<unsigned>(b));
      }
    }
  }
  log_choose_ = std::move(choose);
  recompute_proportions();
}

PyCloneParams PyCloneModel::draw_params(std::size_t num_features, std::size_t samples,
                                        double a_v, double b_v, Rng& rng) {
  PyCloneParams p;
  p.num_features = num_features;
  p.samples = samples;
  p.a_v = a_v;
  p.b_v = b_v;
  p.v.resize(num_features * samples);
  for (double& x : p.v) x = rng.gamma(a_v, b_v);
  return p;
}

std::unique_ptr<Model> PyCloneModel::clone() const { return std::make_unique<PyCloneModel>(*this); }

void PyCloneModel::recompute_proportions() {
  const std::size_t k_total = params_.num_features;
  const std::size_t m_total = params_.samples;
  f_.assign(k_total * m_total, 0.0);
  for (std::size_t m = 0; m < m_total; ++m) {
    double total = 0.0;
    for (std::size_t k = 0; k < k_total; ++k) total += params_.at(k, m);
    for (std::size_t k = 0; k < k_total; ++k) f_[k * m_total + m] = params_.at(k, m) / total;
  }
}

double PyCloneModel::entry_log_likelihood(std::size_t n, std::size_t m, double prevalence) const {
  const double xi = variant_probability(prevalence);
  const double b = data_->variant_reads.at(n, m);
  const double d = data_->depth.at(n, m);
  return (*log_choose_)[n * params_.samples + m] + b * std::log(xi) + (d - b) * std::log1p(-xi);
}

std::unique_ptr<RowEvaluator> PyCloneModel::row_evaluator(std::size_t n,
                                                          const FeatureMatrix&) const {
  return std::make_unique<PyCloneEvaluator>(*this, n);
}

double PyCloneModel::row_log_likelihood(std::size_t n, std::span<const Bit> row,
                                        const FeatureMatrix&) const {
  require(row.size() == params_.num_features, "pyclone_log_likelihood_row: row length mismatch");
  if (flat_) return 0.0;
  const auto phi = pyclone_cellular_prevalence(row, f_, params_.samples);
  double total = 0.0;
  for (std::size_t m = 0; m < params_.samples; ++m) {
    if (data_->is_observed(n, m)) total += entry_log_likelihood(n, m, phi[m]);
  }
  return total;
}

double PyCloneModel::log_likelihood(const FeatureMatrix& z) const {
  double total = 0.0;
  for (std::size_t n = 0; n < data_->rows(); ++n) total += row_log_likelihood(n, z.row(n), z);
  return total;
}

double PyCloneModel::log_prior() const {
  double total = 0.0;
  for (double x : params_.v) total += log_gamma_density(x, params_.a_v, params_.b_v);
  return total;
}

double PyCloneModel::sample_log_likelihood(const FeatureMatrix& z, std::size_t m,
                                           std::span<const double> column) const {
  if (flat_) return 0.0;
  double total_v = 0.0;
  for (double x : column) total_v += x;
  double total = 0.0;
  for (std::size_t n = 0; n < data_->rows(); ++n) {
    if (!data_->is_observed(n, m)) continue;
    double phi = 0.0;
    for (std::size_t k = 0; k < column.size(); ++k) {
      if (z(n, k)) phi += column[k];
    }
    total += entry_log_likelihood(n, m, phi / total_v);
  }
  return total;
}

bool PyCloneModel::accept_column(const FeatureMatrix& z, std::size_t m,
                                 std::span<const double> proposal, double log_extra, Rng& rng) {
  const std::size_t k_total = params_.num_features;
  std::vector<double> current(k_total);
  for (std::size_t k = 0; k < k_total; ++k) current[k] = params_.at(k, m);
  double log_ratio = log_extra + sample_log_likelihood(z, m, proposal) -
                     sample_log_likelihood(z, m, current);
  for (std::size_t k = 0; k < k_total; ++k) {
    log_ratio += log_gamma_density(proposal[k], params_.a_v, params_.b_v) -
                 log_gamma_density(current[k], params_.a_v, params_.b_v);
  }
  if (std::log(rng.uniform()) >= log_ratio) return false;
  for (std::size_t k = 0; k < k_total; ++k) params_.at(k, m) = proposal[k];
  double total = 0.0;
  for (std::size_t k = 0; k < k_total; ++k) total += params_.at(k, m);
  for (std::size_t k = 0; k < k_total; ++k) f_[k * params_.samples + m] = params_.at(k, m) / total;
  return true;
}

void PyCloneModel::update_v_single(const FeatureMatrix& z, Rng& rng) {
  const std::size_t k_total = params_.num_features;
  std::vector<double> column(k_total);
  for (std::size_t m = 0; m < params_.samples; ++m) {
    for (std::size_t k = 0; k < k_total; ++k) {
      for (std::size_t j = 0; j < k_total; ++j) column[j] = params_.at(j, m);
      const double old = column[k];
      column[k] = old * std::exp(params_.step * rng.normal());
      accept_column(z, m, column, std::log(column[k]) - std::log(old), rng);
    }
  }
}

void PyCloneModel::update_v_block(const FeatureMatrix& z, Rng& rng) {
  const std::size_t k_total = params_.num_features;
  std::vector<double> column(k_total);
  for (std::size_t m = 0; m < params_.samples; ++m) {
    double log_jacobian = 0.0;
    for (std::size_t k = 0; k < k_total; ++k) {
      const double eps = params_.step * rng.normal();
      column[k] = params_.at(k, m) * std::exp(eps);
      log_jacobian += eps;
    }
    accept_column(z, m, column, log_jacobian, rng);
  }
}

void PyCloneModel::update_v_permute(const FeatureMatrix& z, Rng& rng) {
  const std::size_t k_total = params_.num_features;
  std::vector<double> column(k_total);
  for (std::size_t m = 0; m < params_.samples; ++m) {
    const auto order = rng.permutation(k_total);
    for (std::size_t k = 0; k < k_total; ++k) column[k] = params_.at(order[k], m);
    accept_column(z, m, column, 0.0, rng);
  }
}

void PyCloneModel::update_parameters(const FeatureMatrix& z, Rng& rng) {
  require(z.cols() == params_.num_features, "PyCloneModel: column mismatch");
  update_v_single(z, rng);
  update_v_block(z, rng);
  update_v_permute(z, rng);
}

void PyCloneModel::append_features_from_prior(std::size_t count, Rng& rng) {
  for (std::size_t i = 0; i < count * params_.samples; ++i) {
    params_.v.push_back(rng.gamma(params_.a_v, params_.b_v));
  }
  params_.num_features += count;
  recompute_proportions();
}

void PyCloneModel::remove_features(std::span<const std::size_t> cols) {
  if (cols.empty()) return;
  std::vector<char> drop(params_.num_features, 0);
  for (std::size_t k : cols) {
    require(k < params_.num_features, "remove_features: bad index");
    drop[k] = 1;
  }
  std::vector<double> kept;
  for (std::size_t k = 0; k < params_.num_features; ++k) {
    if (drop[k]) continue;
    kept.insert(kept.end(), params_.v.begin() + k * params_.samples,
                params_.v.begin() + (k + 1) * params_.samples);
  }
  params_.v = std::move(kept);
  params_.num_features -= cols.size();
  recompute_proportions();
}

void PyCloneModel::permute_features(const Permutation& sigma) {
  require(sigma.size() == params_.num_features, "permute_features: size mismatch");
  std::vector<double> out(params_.v.size());
  for (std::size_t k = 0; k < params_.num_features; ++k) {
    std::copy_n(params_.v.begin() + sigma(k) * params_.samples, params_.samples,
                out.begin() + k * params_.samples);
  }
  params_.v = std::move(out);
  recompute_proportions();
}

}  // namespace featalloc
