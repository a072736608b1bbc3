#include "featalloc/lfrm.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "featalloc/errors.hpp"
#include "featalloc/numeric.hpp"

namespace featalloc {

namespace {

// State layout: [0, N) logits of x_{n,j}; [N, 2N) logits of x_{j,n};
// [2N, 2N+K) r_m = Σ_{l in S} (w_ml + w_lm); [2N+K, 2N+2K) indicator of S;
// [2N+2K] the diagonal logit z_n' W z_n.
class LfrmEvaluator final : public RowEvaluator {
 public:
  LfrmEvaluator(const LfrmModel& model, std::size_t n, const FeatureMatrix& z)
      : model_(model), n_(n), rows_(model.data().rows), k_(model.num_features()) {
    require(z.cols() == k_, "LfrmEvaluator: column mismatch");
    const auto& p = model.params();
    row_terms_.assign(k_ * rows_, 0.0);
    col_terms_.assign(k_ * rows_, 0.0);
    for (std::size_t j = 0; j < rows_; ++j) {
      if (j == n) continue;
      const auto zj = z.row(j);
      for (std::size_t l = 0; l < k_; ++l) {
        if (!zj[l]) continue;
        for (std::size_t k = 0; k < k_; ++k) {
          row_terms_[k * rows_ + j] += p.w(k, l);  // (W z_j)_k
          col_terms_[k * rows_ + j] += p.w(l, k);  // (z_j' W)_k
        }
      }
    }
  }

  std::size_t state_size() const override { return 2 * rows_ + 2 * k_ + 1; }
  void clear(std::span<double> state) const override {
    std::fill(state.begin(), state.end(), 0.0);
  }
  void add(std::span<double> s, std::size_t col) const override {
    const auto& p = model_.params();
    const double* rt = row_terms_.data() + col * rows_;
    const double* ct = col_terms_.data() + col * rows_;
    for (std::size_t j = 0; j < rows_; ++j) {
      s[j] += rt[j];
      s[rows_ + j] += ct[j];
    }
    double* r = s.data() + 2 * rows_;
    s[2 * rows_ + 2 * k_] += p.w(col, col) + r[col];
    for (std::size_t m = 0; m < k_; ++m) r[m] += p.w(m, col) + p.w(col, m);
    s[2 * rows_ + k_ + col] = 1.0;
  }
  void merge(std::span<double> out, std::span<const double> a,
             std::span<const double> b) const override {
    const std::size_t head = 2 * rows_ + 2 * k_;
    for (std::size_t i = 0; i < head; ++i) out[i] = a[i] + b[i];
    double cross = 0.0;
    for (std::size_t m = 0; m < k_; ++m) {
      if (b[2 * rows_ + k_ + m] != 0.0) cross += a[2 * rows_ + m];
    }
    out[head] = a[head] + b[head] + cross;
  }
  double log_likelihood(std::span<const double> s) const override {
    if (model_.flat_likelihood()) return 0.0;
    const auto& data = model_.data();
    double total = 0.0;
    for (std::size_t j = 0; j < rows_; ++j) {
      if (j == n_) continue;
      if (data.is_observed(n_, j)) total += log_bernoulli_logit(data.at(n_, j) != 0, s[j]);
      if (data.is_observed(j, n_)) total += log_bernoulli_logit(data.at(j, n_) != 0, s[rows_ + j]);
    }
    if (data.is_observed(n_, n_)) {
      total += log_bernoulli_logit(data.at(n_, n_) != 0, s[2 * rows_ + 2 * k_]);
    }
    return total;
  }

 private:
  const LfrmModel& model_;
  std::size_t n_;
  std::size_t rows_;
  std::size_t k_;
  std::vector<double> row_terms_;  // K x N
  std::vector<double> col_terms_;  // K x N
};

}  // namespace

LfrmModel::LfrmModel(std::shared_ptr<const RelationData> data, LfrmParams params)
    : data_(std::move(data)), params_(std::move(params)) {
  require(data_ != nullptr, "LfrmModel: null dataset");
  require(data_->rows == data_->cols, "LfrmModel: relation must be square");
  require(params_.weights.size() == params_.num_features * params_.num_features,
          "LfrmModel: weight matrix size mismatch");
  require(params_.tau > 0.0, "LfrmModel: tau must be positive");
  if (params_.symmetric) {
    for (std::size_t k = 0; k < params_.num_features; ++k) {
      for (std::size_t l = 0; l < k; ++l) {
        require(params_.w(k, l) == params_.w(l, k), "LfrmModel: weights not symmetric");
      }
    }
  }
}

LfrmParams LfrmModel::draw_params(std::size_t num_features, double tau, bool symmetric,
                                  Rng& rng) {
  LfrmParams p;
  p.num_features = num_features;
  p.tau = tau;
  p.symmetric = symmetric;
  p.weights.assign(num_features * num_features, 0.0);
  const double sd = 1.0 / std::sqrt(tau);
  for (std::size_t k = 0; k < num_features; ++k) {
    for (std::size_t l = 0; l < num_features; ++l) {
      if (symmetric && l < k) {
        p.w(k, l) = p.w(l, k);
      } else {
        p.w(k, l) = rng.normal(0.0, sd);
      }
    }
  }
  return p;
}

std::unique_ptr<Model> LfrmModel::clone() const { return std::make_unique<LfrmModel>(*this); }

std::unique_ptr<RowEvaluator> LfrmModel::row_evaluator(std::size_t n,
                                                       const FeatureMatrix& z) const {
  return std::make_unique<LfrmEvaluator>(*this, n, z);
}

double LfrmModel::logit(std::span<const Bit> zi, std::span<const Bit> zj) const {
  double total = 0.0;
  for (std::size_t k = 0; k < params_.num_features; ++k) {
    if (!zi[k]) continue;
    for (std::size_t l = 0; l < params_.num_features; ++l) {
      if (zj[l]) total += params_.w(k, l);
    }
  }
  return total;
}

double LfrmModel::row_log_likelihood(std::size_t n, std::span<const Bit> row,
                                     const FeatureMatrix& z) const {
  require(row.size() == params_.num_features, "lfrm_log_likelihood_row: row length mismatch");
  if (flat_) return 0.0;
  double total = 0.0;
  for (std::size_t j = 0; j < data_->rows; ++j) {
    const auto zj = j == n ? row : z.row(j);
    if (data_->is_observed(n, j)) total += log_bernoulli_logit(data_->at(n, j) != 0, logit(row, zj));
    if (j != n && data_->is_observed(j, n)) {
      total += log_bernoulli_logit(data_->at(j, n) != 0, logit(zj, row));
    }
  }
  return total;
}

double LfrmModel::log_likelihood(const FeatureMatrix& z) const {
  if (flat_) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < data_->rows; ++i) {
    for (std::size_t j = 0; j < data_->rows; ++j) {
      if (data_->is_observed(i, j)) {
        total += log_bernoulli_logit(data_->at(i, j) != 0, logit(z.row(i), z.row(j)));
      }
    }
  }
  return total;
}

double LfrmModel::log_prior() const {
  double total = log_gamma_density(params_.tau, params_.a, params_.b);
  for (std::size_t k = 0; k < params_.num_features; ++k) {
    for (std::size_t l = params_.symmetric ? k : 0; l < params_.num_features; ++l) {
      total += log_normal_density(params_.w(k, l), 0.0, params_.tau);
    }
  }
  return total;
}

void LfrmModel::update_weights(const FeatureMatrix& z, Rng& rng) {
  const std::size_t n_rows = data_->rows;
  const std::size_t k_total = params_.num_features;
  require(z.cols() == k_total, "update_weights: column mismatch");
  // Current logits for every pair.
  std::vector<double> logits(n_rows * n_rows, 0.0);
  if (!flat_) {
    for (std::size_t i = 0; i < n_rows; ++i) {
      for (std::size_t j = 0; j < n_rows; ++j) logits[i * n_rows + j] = logit(z.row(i), z.row(j));
    }
  }
  std::vector<std::vector<std::size_t>> members(k_total);
  for (std::size_t n = 0; n < n_rows; ++n) {
    for (std::size_t k = 0; k < k_total; ++k) {
      if (z(n, k)) members[k].push_back(n);
    }
  }
  std::vector<std::pair<std::size_t, double>> touched;  // (pair index, logit change)
  for (std::size_t k = 0; k < k_total; ++k) {
    for (std::size_t l = params_.symmetric ? k : 0; l < k_total; ++l) {
      const double current = params_.w(k, l);
      const double delta = params_.step * rng.normal();
      const double proposal = current + delta;
      double log_ratio = log_normal_density(proposal, 0.0, params_.tau) -
                         log_normal_density(current, 0.0, params_.tau);
      touched.clear();
      if (!flat_) {
        auto visit = [&](std::size_t i, std::size_t j, double coef) {
          if (coef == 0.0 || !data_->is_observed(i, j)) return;
          touched.emplace_back(i * n_rows + j, coef * delta);
        };
        if (!params_.symmetric || k == l) {
          for (std::size_t i : members[k]) {
            for (std::size_t j : members[l]) visit(i, j, 1.0);
          }
        } else {
          // Both w_kl and w_lk move: Δlogit_ij = δ (z_ik z_jl + z_il z_jk).
          std::vector<std::size_t> both;
          std::set_union(members[k].begin(), members[k].end(), members[l].begin(),
                         members[l].end(), std::back_inserter(both));
          for (std::size_t i : both) {
            for (std::size_t j : both) {
              visit(i, j, static_cast<double>(z(i, k) * z(j, l) + z(i, l) * z(j, k)));
            }
          }
        }
        for (const auto& [idx, change] : touched) {
          const bool x = data_->values[idx] != 0;
          log_ratio += log_bernoulli_logit(x, logits[idx] + change) -
                       log_bernoulli_logit(x, logits[idx]);
        }
      }
      ++weight_proposals_;
      if (std::log(rng.uniform()) < log_ratio) {
        ++weight_accepts_;
        params_.w(k, l) = proposal;
        if (params_.symmetric) params_.w(l, k) = proposal;
        for (const auto& [idx, change] : touched) logits[idx] += change;
      }
    }
  }
}

void LfrmModel::update_tau(Rng& rng) {
  const std::size_t k_total = params_.num_features;
  double sq = 0.0;
  double count = 0.0;
  for (std::size_t k = 0; k < k_total; ++k) {
    for (std::size_t l = params_.symmetric ? k : 0; l < k_total; ++l) {
      sq += params_.w(k, l) * params_.w(k, l);
      count += 1.0;
    }
  }
  auto log_target = [&](double tau) {
    return log_gamma_density(tau, params_.a, params_.b) + 0.5 * count * std::log(tau) -
           0.5 * tau * sq;
  };
  const double proposal = params_.tau * std::exp(params_.step * rng.normal());
  const double log_ratio = log_target(proposal) - log_target(params_.tau) +
                           std::log(proposal) - std::log(params_.tau);
  if (std::log(rng.uniform()) < log_ratio) params_.tau = proposal;
}

void LfrmModel::update_parameters(const FeatureMatrix& z, Rng& rng) {
  update_weights(z, rng);
  update_tau(rng);
}

void LfrmModel::append_features_from_prior(std::size_t count, Rng& rng) {
  if (count == 0) return;
  const std::size_t old_k = params_.num_features;
  const std::size_t new_k = old_k + count;
  std::vector<double> weights(new_k * new_k, 0.0);
  for (std::size_t k = 0; k < old_k; ++k) {
    std::copy_n(params_.weights.begin() + k * old_k, old_k, weights.begin() + k * new_k);
  }
  const double sd = 1.0 / std::sqrt(params_.tau);
  for (std::size_t k = 0; k < new_k; ++k) {
    for (std::size_t l = 0; l < new_k; ++l) {
      if (k < old_k && l < old_k) continue;
      if (params_.symmetric && l < k) {
        weights[k * new_k + l] = weights[l * new_k + k];
      } else {
        weights[k * new_k + l] = rng.normal(0.0, sd);
      }
    }
  }
  params_.weights = std::move(weights);
  params_.num_features = new_k;
}

void LfrmModel::remove_features(std::span<const std::size_t> cols) {
  if (cols.empty()) return;
  std::vector<char> drop(params_.num_features, 0);
  for (std::size_t k : cols) {
    require(k < params_.num_features, "remove_features: bad index");
    drop[k] = 1;
  }
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < params_.num_features; ++k) {
    if (!drop[k]) keep.push_back(k);
  }
  std::vector<double> weights(keep.size() * keep.size());
  for (std::size_t a = 0; a < keep.size(); ++a) {
    for (std::size_t b = 0; b < keep.size(); ++b) weights[a * keep.size() + b] = params_.w(keep[a], keep[b]);
  }
  params_.weights = std::move(weights);
  params_.num_features = keep.size();
}

void LfrmModel::permute_features(const Permutation& sigma) {
  require(sigma.size() == params_.num_features, "permute_features: size mismatch");
  const std::size_t k_total = params_.num_features;
  std::vector<double> weights(k_total * k_total);
  for (std::size_t k = 0; k < k_total; ++k) {
    for (std::size_t l = 0; l < k_total; ++l) weights[k * k_total + l] = params_.w(sigma(k), sigma(l));
  }
  params_.weights = std::move(weights);
}

}  // namespace featalloc
