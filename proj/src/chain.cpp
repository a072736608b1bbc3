#include "featalloc/chain.hpp"

#include <cmath>
#include <numeric>

#include "featalloc/errors.hpp"
#include "featalloc/linear_gaussian.hpp"

namespace featalloc {

std::string to_string(SingletonUpdate kind) {
  return kind == SingletonUpdate::MetropolisHastings ? "mh" : "collapsed";
}

SingletonUpdate singleton_update_from_string(const std::string& name) {
  if (name == "mh") return SingletonUpdate::MetropolisHastings;
  if (name == "collapsed") return SingletonUpdate::CollapsedLinearGaussian;
  throw ValidationError("unknown singleton update '" + name + "'");
}

ChainState::ChainState(FeatureMatrix z_, std::unique_ptr<Model> model_, PriorSpec prior_)
    : z(std::move(z_)), model(std::move(model_)), prior(prior_) {
  require(model != nullptr, "ChainState: null model");
  require(model->num_features() == z.cols(), "ChainState: parameter and allocation widths differ");
  require(model->num_rows() == z.rows(), "ChainState: row count mismatch");
}

ChainState::ChainState(const ChainState& other)
    : z(other.z), model(other.model ? other.model->clone() : nullptr), prior(other.prior) {}

ChainState& ChainState::operator=(const ChainState& other) {
  if (this != &other) {
    z = other.z;
    model = other.model ? other.model->clone() : nullptr;
    prior = other.prior;
  }
  return *this;
}

double ChainState::log_joint() const {
  return log_pmf(z, prior) + model->log_prior() + model->log_likelihood(z);
}

std::vector<std::size_t> singleton_columns(const FeatureMatrix& z, std::size_t n) {
  std::vector<std::size_t> cols;
  for (std::size_t k = 0; k < z.cols(); ++k) {
    if (z(n, k) && z.col_count(k) == 1) cols.push_back(k);
  }
  return cols;
}

namespace {

double ibp_alpha(const ChainState& state, const char* what) {
  const auto* ibp = std::get_if<IbpPrior>(&state.prior);
  if (ibp == nullptr) throw ContractViolation(std::string(what) + ": requires the IBP prior");
  if (state.model->kind() == ModelKind::PyClone) {
    throw ContractViolation(std::string(what) + ": the PyClone model is only defined under FBB");
  }
  return ibp->alpha;
}

std::vector<std::size_t> range(std::size_t first, std::size_t count) {
  std::vector<std::size_t> out(count);
  std::iota(out.begin(), out.end(), first);
  return out;
}

}  // namespace

bool update_singletons_mh(std::size_t n, ChainState& state, Rng& rng) {
  const double alpha = ibp_alpha(state, "update_singletons_mh");
  FeatureMatrix& z = state.z;
  Model& model = *state.model;
  const auto old_cols = singleton_columns(z, n);
  const std::size_t k_new = rng.poisson(alpha / static_cast<double>(z.rows()));
  if (old_cols.empty() && k_new == 0) return true;

  const std::size_t k_before = z.cols();
  z.append_cols(k_new);
  model.append_features_from_prior(k_new, rng);
  FeatureRow current(z.row(n).begin(), z.row(n).end());
  FeatureRow proposed = current;
  for (std::size_t k : old_cols) proposed[k] = 0;
  for (std::size_t k = k_before; k < z.cols(); ++k) proposed[k] = 1;

  const double log_ratio =
      model.row_log_likelihood(n, proposed, z) - model.row_log_likelihood(n, current, z);
  if (std::log(rng.uniform()) < log_ratio) {
    z.set_row(n, proposed);
    z.remove_cols(old_cols);
    model.remove_features(old_cols);
    return true;
  }
  const auto added = range(k_before, k_new);
  z.remove_cols(added);
  model.remove_features(added);
  return false;
}

bool update_singletons_collapsed_lg(std::size_t n, ChainState& state, Rng& rng) {
  const double alpha = ibp_alpha(state, "update_singletons_collapsed_lg");
  auto* lg = dynamic_cast<LinearGaussianModel*>(state.model.get());
  if (lg == nullptr) {
    throw ContractViolation("update_singletons_collapsed_lg: requires the linear Gaussian model");
  }
  FeatureMatrix& z = state.z;
  const auto old_cols = singleton_columns(z, n);
  const std::size_t k_old = old_cols.size();
  const std::size_t k_new = rng.poisson(alpha / static_cast<double>(z.rows()));
  if (k_old == 0 && k_new == 0) return true;

  const RealData& data = lg->data();
  const std::size_t dims = data.cols;
  FeatureRow base(z.row(n).begin(), z.row(n).end());
  for (std::size_t k : old_cols) base[k] = 0;
  std::vector<double> residual;
  std::vector<std::size_t> observed_dims;
  for (std::size_t d = 0; d < dims; ++d) {
    if (!data.is_observed(n, d)) continue;
    residual.push_back(data.at(n, d) - lg->reconstruct(base, d));
    observed_dims.push_back(d);
  }
  const auto& p = lg->params();
  double log_ratio = 0.0;
  if (!lg->flat_likelihood()) {
    log_ratio = lg_singleton_log_marginal(residual, k_new, p.tau_v, p.tau_x) -
                lg_singleton_log_marginal(residual, k_old, p.tau_v, p.tau_x);
  }
  if (std::log(rng.uniform()) >= log_ratio) return false;

  z.set_row(n, base);
  z.remove_cols(old_cols);
  lg->remove_features(old_cols);
  const std::size_t first = z.cols();
  z.append_cols(k_new);
  lg->append_features_from_prior(k_new, rng);
  for (std::size_t k = first; k < z.cols(); ++k) z.set(n, k, 1);
  if (k_new == 0 || lg->flat_likelihood()) return true;

  // Sum of the new values given the residual, then the individual values
  // given their sum.
  auto& mp = lg->mutable_params();
  const double kd = static_cast<double>(k_new);
  const double prior_sd = 1.0 / std::sqrt(mp.tau_v);
  std::vector<double> draws(k_new);
  for (std::size_t i = 0; i < observed_dims.size(); ++i) {
    const double precision = mp.tau_v / kd + mp.tau_x;
    const double mean = mp.tau_x * residual[i] / precision;
    const double sum = rng.normal(mean, 1.0 / std::sqrt(precision));
    double draw_mean = 0.0;
    for (double& w : draws) {
      w = rng.normal(0.0, prior_sd);
      draw_mean += w / kd;
    }
    for (std::size_t j = 0; j < k_new; ++j) {
      mp.v(first + j, observed_dims[i]) = sum / kd + draws[j] - draw_mean;
    }
  }
  return true;
}

void prune_empty_features(ChainState& state) {
  const auto removed = state.z.remove_empty_cols();
  state.model->remove_features(removed);
}

void sweep(ChainState& state, const SweepOptions& options, Rng& rng, SweepStats* stats) {
  const bool ibp = is_ibp(state.prior);
  if (ibp) prune_empty_features(state);
  const auto order = rng.permutation(state.z.rows());
  for (std::size_t n : order) {
    {
      const auto evaluator = state.model->row_evaluator(n, state.z);
      const RowProblem problem = make_row_problem(n, state.z, state.prior, *evaluator);
      const FeatureRow row = update_row(options.sampler, problem, options.config, rng,
                                        stats ? &stats->rows : nullptr);
      state.z.set_row(n, row);
    }
    if (ibp) {
      const bool accepted = options.singletons == SingletonUpdate::CollapsedLinearGaussian
                                ? update_singletons_collapsed_lg(n, state, rng)
                                : update_singletons_mh(n, state, rng);
      if (stats) {
        ++stats->singletons.proposals;
        stats->singletons.accepts += accepted;
      }
    }
  }
  if (ibp) prune_empty_features(state);
  if (options.update_parameters) state.model->update_parameters(state.z, rng);
  if (ibp && options.update_alpha) {
    auto& prior = std::get<IbpPrior>(state.prior);
    prior.alpha = update_alpha(prior.alpha, state.z, rng);
  }
}

}  // namespace featalloc
