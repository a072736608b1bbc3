#include "featalloc/synth.hpp"

#include <algorithm>
#include <cmath>

#include "featalloc/errors.hpp"

namespace featalloc {

ModelKind model_kind_of(const ModelParams& params) {
  switch (params.index()) {
    case 0:
      return ModelKind::LinearGaussian;
    case 1:
      return ModelKind::Lfrm;
    default:
      return ModelKind::PyClone;
  }
}

std::size_t num_features(const ModelParams& params) {
  return std::visit([](const auto& p) { return p.num_features; }, params);
}

std::unique_ptr<Model> make_model(std::shared_ptr<const Dataset> data, const ModelParams& params) {
  require(data != nullptr, "make_model: null dataset");
  if (const auto* p = std::get_if<LinearGaussianParams>(&params)) {
    const auto* d = std::get_if<RealData>(data.get());
    if (d == nullptr) throw ValidationError("linear Gaussian model needs real-valued data");
    return std::make_unique<LinearGaussianModel>(std::shared_ptr<const RealData>(data, d), *p);
  }
  if (const auto* p = std::get_if<LfrmParams>(&params)) {
    const auto* d = std::get_if<RelationData>(data.get());
    if (d == nullptr) throw ValidationError("relational model needs relation data");
    return std::make_unique<LfrmModel>(std::shared_ptr<const RelationData>(data, d), *p);
  }
  const auto* d = std::get_if<CountData>(data.get());
  if (d == nullptr) throw ValidationError("PyClone model needs read-count data");
  return std::make_unique<PyCloneModel>(std::shared_ptr<const CountData>(data, d),
                                        std::get<PyCloneParams>(params));
}

ModelParams model_params(const Model& model) {
  if (const auto* m = dynamic_cast<const LinearGaussianModel*>(&model)) return m->params();
  if (const auto* m = dynamic_cast<const LfrmModel*>(&model)) return m->params();
  if (const auto* m = dynamic_cast<const PyCloneModel*>(&model)) return m->params();
  throw ContractViolation("model_params: unknown model type");
}

void SimSpec::validate() const {
  auto fail = [](const std::string& msg) { throw ValidationError("simulation: " + msg); };
  try {
    featalloc::validate(prior);
  } catch (const ContractViolation& e) {
    fail(e.what());
  }
  if (rows == 0) fail("rows must be positive");
  if (model != ModelKind::Lfrm && dims == 0) fail("dims must be positive");
  if (!(missing_fraction >= 0.0 && missing_fraction < 1.0)) fail("missing_fraction must lie in [0, 1)");
  if (!(tau_v > 0.0) || !(tau_x > 0.0) || !(lfrm_tau > 0.0)) fail("precisions must be positive");
  if (!(a_v > 0.0) || !(b_v > 0.0)) fail("a_v and b_v must be positive");
  if (!(mean_depth > 0.0)) fail("mean_depth must be positive");
  if (max_attempts == 0) fail("max_attempts must be positive");
  if (model == ModelKind::PyClone && is_ibp(prior)) fail("the PyClone model requires the FBB prior");
  if (z && z->rows() != rows) fail("Z override has the wrong number of rows");
  if (z && !is_ibp(prior) && z->cols() != std::get<FbbPrior>(prior).num_features) {
    fail("Z override width differs from the FBB feature count");
  }
  if (feature_values) {
    if (!z && is_ibp(prior)) fail("feature values under the IBP need a Z override");
    const std::size_t k = z ? z->cols() : std::get<FbbPrior>(prior).num_features;
    const std::size_t expected = model == ModelKind::Lfrm ? k * k : k * dims;
    if (feature_values->size() != expected) fail("feature value count mismatch");
    if (model == ModelKind::PyClone) {
      for (double v : *feature_values) {
        if (!(v > 0.0)) fail("PyClone feature values must be positive");
      }
    }
    if (model == ModelKind::Lfrm && symmetric) {
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
          if ((*feature_values)[i * k + j] != (*feature_values)[j * k + i]) {
            fail("symmetric weights must form a symmetric matrix");
          }
        }
      }
    }
  }
}

FeatureMatrix draw_feature_matrix(const PriorSpec& prior, std::size_t rows, Rng& rng) {
  if (const auto* fbb = std::get_if<FbbPrior>(&prior)) {
    FeatureMatrix z(rows, fbb->num_features);
    for (std::size_t k = 0; k < fbb->num_features; ++k) {
      const double p = rng.beta(fbb->a, fbb->b);
      for (std::size_t n = 0; n < rows; ++n) z.set(n, k, rng.bernoulli(p));
    }
    return z;
  }
  const double alpha = std::get<IbpPrior>(prior).alpha;
  FeatureMatrix z(rows, 0);
  for (std::size_t n = 0; n < rows; ++n) {
    const double customers = static_cast<double>(n + 1);
    for (std::size_t k = 0; k < z.cols(); ++k) {
      if (rng.bernoulli(static_cast<double>(z.col_count(k)) / customers)) z.set(n, k, 1);
    }
    const std::size_t fresh = rng.poisson(alpha / customers);
    const std::size_t first = z.cols();
    z.append_cols(fresh);
    for (std::size_t k = first; k < z.cols(); ++k) z.set(n, k, 1);
  }
  return z;
}

namespace {

ModelParams draw_params(const SimSpec& spec, std::size_t k, Rng& rng) {
  switch (spec.model) {
    case ModelKind::LinearGaussian: {
      auto p = LinearGaussianModel::draw_params(k, spec.dims, spec.tau_v, spec.tau_x, rng);
      if (spec.feature_values) p.features = *spec.feature_values;
      return p;
    }
    case ModelKind::Lfrm: {
      auto p = LfrmModel::draw_params(k, spec.lfrm_tau, spec.symmetric, rng);
      if (spec.feature_values) p.weights = *spec.feature_values;
      return p;
    }
    case ModelKind::PyClone: {
      auto p = PyCloneModel::draw_params(k, spec.dims, spec.a_v, spec.b_v, rng);
      if (spec.feature_values) p.v = *spec.feature_values;
      return p;
    }
  }
  throw ContractViolation("unknown model kind");
}

RealData simulate_lg(const LinearGaussianParams& p, const FeatureMatrix& z, Rng& rng) {
  RealData x(z.rows(), p.dims);
  const double sd = 1.0 / std::sqrt(p.tau_x);
  for (std::size_t n = 0; n < z.rows(); ++n) {
    for (std::size_t d = 0; d < p.dims; ++d) {
      double mean = 0.0;
      for (std::size_t k = 0; k < p.num_features; ++k) {
        if (z(n, k)) mean += p.v(k, d);
      }
      x.at(n, d) = sd > 0.0 ? rng.normal(mean, sd) : mean;
    }
  }
  return x;
}

RelationData simulate_lfrm(const LfrmParams& p, const FeatureMatrix& z, Rng& rng) {
  const std::size_t n_rows = z.rows();
  RelationData x(n_rows, n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t j = p.symmetric ? i : 0; j < n_rows; ++j) {
      double logit = 0.0;
      for (std::size_t k = 0; k < p.num_features; ++k) {
        if (!z(i, k)) continue;
        for (std::size_t l = 0; l < p.num_features; ++l) {
          if (z(j, l)) logit += p.w(k, l);
        }
      }
      const bool link = rng.bernoulli(1.0 / (1.0 + std::exp(-logit)));
      x.at(i, j) = link;
      if (p.symmetric) x.at(j, i) = link;
    }
  }
  return x;
}

CountData simulate_pyclone(const PyCloneParams& p, const FeatureMatrix& z, double mean_depth,
                           Rng& rng) {
  const std::size_t n_rows = z.rows();
  const std::size_t m_total = p.samples;
  std::vector<double> f(p.num_features * m_total, 0.0);
  for (std::size_t m = 0; m < m_total; ++m) {
    double total = 0.0;
    for (std::size_t k = 0; k < p.num_features; ++k) total += p.at(k, m);
    for (std::size_t k = 0; k < p.num_features; ++k) f[k * m_total + m] = p.at(k, m) / total;
  }
  CountData data{MaskedMatrix<int>(n_rows, m_total), MaskedMatrix<int>(n_rows, m_total)};
  for (std::size_t n = 0; n < n_rows; ++n) {
    const auto phi = pyclone_cellular_prevalence(z.row(n), f, m_total);
    for (std::size_t m = 0; m < m_total; ++m) {
      const unsigned depth = rng.poisson(mean_depth);
      const double prob = p.error_rate + (p.het_vaf - p.error_rate) * phi[m];
      data.depth.at(n, m) = static_cast<int>(depth);
      data.variant_reads.at(n, m) = static_cast<int>(rng.binomial(depth, prob));
    }
  }
  return data;
}

}  // namespace

SimResult simulate(const SimSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  FeatureMatrix z;
  if (spec.z) {
    z = *spec.z;
  } else {
    std::size_t attempt = 0;
    for (;; ++attempt) {
      if (attempt == spec.max_attempts) {
        throw DegenerateSupportError("simulate: every prior draw of Z had no features");
      }
      z = draw_feature_matrix(spec.prior, spec.rows, rng);
      if (z.cols() > 0) break;
    }
  }
  SimResult out;
  out.prior = spec.prior;
  out.params = draw_params(spec, z.cols(), rng);
  switch (spec.model) {
    case ModelKind::LinearGaussian:
      out.data = simulate_lg(std::get<LinearGaussianParams>(out.params), z, rng);
      break;
    case ModelKind::Lfrm:
      out.data = simulate_lfrm(std::get<LfrmParams>(out.params), z, rng);
      break;
    case ModelKind::PyClone:
      out.data = simulate_pyclone(std::get<PyCloneParams>(out.params), z, spec.mean_depth, rng);
      break;
  }
  out.z = std::move(z);
  out.heldout = mask_missing(out.data, spec.missing_fraction, rng);
  out.log_density = generating_log_density(out);
  return out;
}

std::vector<HeldOutEntry> mask_missing(Dataset& data, double fraction, Rng& rng) {
  require(fraction >= 0.0 && fraction < 1.0, "mask_missing: fraction must lie in [0, 1)");
  std::vector<HeldOutEntry> heldout;
  std::visit(
      [&](auto& d) {
        using T = std::decay_t<decltype(d)>;
        auto& primary = [&]() -> auto& {
          if constexpr (std::is_same_v<T, CountData>) {
            return d.variant_reads;
          } else {
            return d;
          }
        }();
        const std::size_t entries = primary.rows * primary.cols;
        const auto count =
            static_cast<std::size_t>(std::floor(fraction * static_cast<double>(entries)));
        if (count == 0) return;
        auto order = rng.permutation(entries);
        order.resize(count);
        std::sort(order.begin(), order.end());
        for (std::size_t idx : order) {
          heldout.push_back({idx / primary.cols, idx % primary.cols,
                             static_cast<double>(primary.values[idx])});
          primary.values[idx] = 0;
          primary.observed[idx] = 0;
          if constexpr (std::is_same_v<T, CountData>) {
            d.depth.observed[idx] = 0;
          }
        }
      },
      data);
  return heldout;
}

double generating_log_density(const SimResult& sim) {
  const auto data = std::make_shared<const Dataset>(sim.data);
  const auto model = make_model(data, sim.params);
  return log_pmf(sim.z, sim.prior) + model->log_prior() + model->log_likelihood(sim.z);
}

Dataset restore_heldout(const Dataset& data, const std::vector<HeldOutEntry>& heldout) {
  Dataset out = data;
  std::visit(
      [&](auto& d) {
        using T = std::decay_t<decltype(d)>;
        for (const auto& e : heldout) {
          if constexpr (std::is_same_v<T, CountData>) {
            require(e.row < d.rows() && e.col < d.cols(), "restore_heldout: entry out of range");
            d.variant_reads.at(e.row, e.col) = static_cast<int>(e.value);
            d.variant_reads.observed[e.row * d.cols() + e.col] = 1;
            d.depth.observed[e.row * d.cols() + e.col] = 1;
          } else {
            require(e.row < d.rows && e.col < d.cols, "restore_heldout: entry out of range");
            d.at(e.row, e.col) = static_cast<typename decltype(d.values)::value_type>(e.value);
            d.observed[e.row * d.cols + e.col] = 1;
          }
        }
      },
      out);
  return out;
}

}  // namespace featalloc
