#include <doctest.h>

#include <cmath>

#include "featalloc/errors.hpp"
#include "featalloc/lfrm.hpp"
#include "featalloc/linear_gaussian.hpp"
#include "featalloc/numeric.hpp"
#include "featalloc/prior.hpp"
#include "featalloc/pyclone.hpp"
#include "support.hpp"

using namespace featalloc;

namespace {

std::shared_ptr<RelationData> random_relation(std::size_t n, bool symmetric, Rng& rng) {
  auto x = std::make_shared<RelationData>(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = symmetric ? i : 0; j < n; ++j) {
      x->at(i, j) = rng.bernoulli(0.4);
      if (symmetric) x->at(j, i) = x->at(i, j);
    }
  }
  return x;
}

std::shared_ptr<CountData> random_counts(std::size_t n, std::size_t m, Rng& rng) {
  auto c = std::make_shared<CountData>();
  c->variant_reads = MaskedMatrix<int>(n, m);
  c->depth = MaskedMatrix<int>(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const int d = static_cast<int>(rng.poisson(50.0));
      c->depth.at(i, j) = d;
      c->variant_reads.at(i, j) = static_cast<int>(rng.binomial(d, 0.3));
    }
  }
  return c;
}

FeatureMatrix random_z(std::size_t rows, std::size_t cols, Rng& rng) {
  FeatureMatrix z(rows, cols);
  for (std::size_t n = 0; n < rows; ++n) {
    for (std::size_t k = 0; k < cols; ++k) z.set(n, k, rng.bernoulli(0.5));
  }
  return z;
}

/// The incremental evaluator must agree with the direct row likelihood when the
/// row is built from arbitrary prefix/suffix splits.
void check_evaluator(const Model& model, const FeatureMatrix& z, Rng& rng) {
  const std::size_t k_total = z.cols();
  for (std::size_t n = 0; n < z.rows(); ++n) {
    const auto ev = model.row_evaluator(n, z);
    for (int trial = 0; trial < 5; ++trial) {
      FeatureRow row(k_total);
      for (auto& b : row) b = rng.bernoulli(0.5);
      const double direct = model.row_log_likelihood(n, row, z);
      CHECK(ev->evaluate(row) == doctest::Approx(direct).epsilon(1e-12));
      const std::size_t split = rng.uniform_index(k_total + 1);
      std::vector<double> a(ev->state_size()), b(ev->state_size()), full(ev->state_size());
      ev->clear(a);
      ev->clear(b);
      for (std::size_t k = 0; k < k_total; ++k) {
        if (row[k]) ev->add(k < split ? std::span<double>(a) : std::span<double>(b), k);
      }
      ev->merge(full, a, b);
      CHECK(ev->log_likelihood(full) == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

}  // namespace

TEST_CASE("linear gaussian row likelihood examples") {
  auto x = std::make_shared<RealData>(2, 3);
  LinearGaussianParams p;
  p.num_features = 1;
  p.dims = 3;
  p.features = {2.0, 2.0, 2.0};
  p.tau_x = 4.0;
  const LinearGaussianModel model(x, p);
  FeatureMatrix z(2, 1);
  const FeatureRow off{0};
  CHECK(model.row_log_likelihood(0, off, z) ==
        doctest::Approx(1.5 * std::log(4.0 / (2.0 * M_PI))).epsilon(1e-14));

  auto y = std::make_shared<RealData>(1, 1);
  y->at(0, 0) = 2.0;
  LinearGaussianParams q;
  q.num_features = 1;
  q.dims = 1;
  q.features = {2.0};
  q.tau_x = 1.0;
  const LinearGaussianModel one(y, q);
  const FeatureRow on{1};
  CHECK(one.row_log_likelihood(0, on, FeatureMatrix(1, 1)) ==
        doctest::Approx(-0.5 * std::log(2.0 * M_PI)).epsilon(1e-14));

  auto missing = std::make_shared<RealData>(1, 2);
  missing->observed = {0, 0};
  LinearGaussianParams r;
  r.num_features = 1;
  r.dims = 2;
  r.features = {1.0, 1.0};
  const LinearGaussianModel blank(missing, r);
  CHECK(blank.row_log_likelihood(0, on, FeatureMatrix(1, 1)) == 0.0);
}

TEST_CASE("evaluators agree with direct row likelihoods") {
  Rng rng(3);
  auto lg = testing::make_lg_instance(7, 4, 5, 1.0, 2.0, 9);
  check_evaluator(*lg.model, lg.z, rng);

  for (bool symmetric : {false, true}) {
    auto rel = random_relation(6, symmetric, rng);
    rel->observed[3] = 0;
    if (symmetric) rel->observed[3 * 6] = 0;
    const auto z = random_z(6, 4, rng);
    LfrmModel lfrm(rel, LfrmModel::draw_params(4, 1.0, symmetric, rng));
    check_evaluator(lfrm, z, rng);
  }

  auto counts = random_counts(6, 3, rng);
  counts->variant_reads.observed[4] = 0;
  PyCloneModel pyclone(counts, PyCloneModel::draw_params(4, 3, 1.0, 1.0, rng));
  check_evaluator(pyclone, random_z(6, 4, rng), rng);
}

TEST_CASE("lfrm row likelihood examples") {
  Rng rng(5);
  auto rel = random_relation(4, false, rng);
  rel->observed[1] = 0;  // pair (0, 1) missing
  LfrmModel model(rel, LfrmModel::draw_params(3, 1.0, false, rng));
  const auto z = random_z(4, 3, rng);
  const FeatureRow zero(3, 0);
  // Entity 0 touches 2N - 1 = 7 pairs, one of them missing.
  CHECK(model.row_log_likelihood(0, zero, z) == doctest::Approx(6.0 * std::log(0.5)));

  auto single = std::make_shared<RelationData>(1, 1);
  single->at(0, 0) = 1;
  LfrmParams p;
  p.num_features = 1;
  p.weights = {std::log(3.0)};
  LfrmModel pair(single, p);
  const FeatureRow on{1};
  CHECK(pair.row_log_likelihood(0, on, FeatureMatrix(1, 1)) ==
        doctest::Approx(std::log(0.75)).epsilon(1e-14));
}

TEST_CASE("pyclone prevalence and likelihood examples") {
  const std::vector<double> f{0.3, 0.7};
  CHECK(pyclone_cellular_prevalence(FeatureRow{1, 0}, f, 1)[0] == doctest::Approx(0.3));
  CHECK(pyclone_cellular_prevalence(FeatureRow{1, 1}, f, 1)[0] == doctest::Approx(1.0));
  CHECK(pyclone_cellular_prevalence(FeatureRow{0, 0}, f, 1)[0] == 0.0);

  auto c = std::make_shared<CountData>();
  c->variant_reads = MaskedMatrix<int>(2, 1);
  c->depth = MaskedMatrix<int>(2, 1);
  c->depth.at(0, 0) = 10;
  PyCloneParams p;
  p.num_features = 1;
  p.samples = 1;
  p.v = {1.0};
  const PyCloneModel model(c, p);
  const FeatureRow off{0};
  CHECK(model.row_log_likelihood(0, off, FeatureMatrix(2, 1)) ==
        doctest::Approx(10.0 * std::log(0.99)).epsilon(1e-13));
  CHECK(model.row_log_likelihood(1, off, FeatureMatrix(2, 1)) == 0.0);
  CHECK(model.variant_probability(1.0) == doctest::Approx(0.5));
}

TEST_CASE("row likelihoods are invariant to a joint feature permutation") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 1 + rng.uniform_index(5);
    const Permutation sigma(rng.permutation(k));
    auto lg = testing::make_lg_instance(5, 3, k, 1.0, 1.0, 100 + trial);
    auto rel = random_relation(5, trial % 2 == 0, rng);
    LfrmModel lfrm(rel, LfrmModel::draw_params(k, 1.0, trial % 2 == 0, rng));
    PyCloneModel pyclone(random_counts(5, 2, rng), PyCloneModel::draw_params(k, 2, 1.0, 1.0, rng));
    const auto z = random_z(5, k, rng);
    const auto zp = z.permute_cols(sigma);
    for (Model* model : std::initializer_list<Model*>{lg.model.get(), &lfrm, &pyclone}) {
      std::vector<double> before;
      for (std::size_t n = 0; n < 5; ++n) before.push_back(model->row_log_likelihood(n, z.row(n), z));
      auto permuted = model->clone();
      permuted->permute_features(sigma);
      for (std::size_t n = 0; n < 5; ++n) {
        CHECK(permuted->row_log_likelihood(n, zp.row(n), zp) ==
              doctest::Approx(before[n]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("linear gaussian feature conditional without users is the prior") {
  auto lg = testing::make_lg_instance(4, 1, 2, 4.0, 1.0, 1);
  FeatureMatrix z(4, 2);
  for (std::size_t n = 0; n < 4; ++n) z.set(n, 0, 1);
  Rng rng(2);
  double sum = 0.0, sq = 0.0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    lg.model->gibbs_update_features(z, rng);
    const double v = lg.model->params().v(1, 0);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / draws;
  const double var = sq / draws - mean * mean;
  CHECK(std::abs(mean) < 3.0 * std::sqrt(0.25 / draws));
  CHECK(var == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("linear gaussian tau_x posterior concentrates on the truth") {
  Rng rng(8);
  auto lg = testing::make_lg_instance(1000, 10, 5, 0.25, 25.0, 4);
  lg.model->mutable_params().tau_x = 1.0;
  double total = 0.0;
  for (int i = 0; i < 200; ++i) {
    lg.model->gibbs_update_tau_x(lg.z, rng);
    total += lg.model->params().tau_x;
  }
  CHECK(total / 200.0 == doctest::Approx(25.0).epsilon(0.10));
}

TEST_CASE("lfrm weights stay symmetric and the sampler moves") {
  Rng rng(9);
  auto rel = random_relation(8, true, rng);
  LfrmModel model(rel, LfrmModel::draw_params(3, 1.0, true, rng));
  const auto z = random_z(8, 3, rng);
  for (int i = 0; i < 50; ++i) {
    model.update_parameters(z, rng);
    const auto& p = model.params();
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t l = 0; l < 3; ++l) CHECK(p.w(k, l) == p.w(l, k));
    }
  }
  const double rate = static_cast<double>(model.weight_accepts()) /
                      static_cast<double>(model.weight_proposals());
  CHECK(rate > 0.1);
  CHECK(rate < 0.95);
}

TEST_CASE("pyclone proportions stay normalised") {
  Rng rng(10);
  PyCloneModel model(random_counts(10, 3, rng), PyCloneModel::draw_params(4, 3, 1.0, 1.0, rng));
  const auto z = random_z(10, 4, rng);
  for (int i = 0; i < 30; ++i) {
    model.update_parameters(z, rng);
    for (std::size_t m = 0; m < 3; ++m) {
      double total = 0.0;
      for (std::size_t k = 0; k < 4; ++k) total += model.proportions()[k * 3 + m];
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("feature append and removal keep parameters aligned") {
  Rng rng(12);
  auto lg = testing::make_lg_instance(3, 2, 3, 1.0, 1.0, 5);
  const double kept = lg.model->params().v(2, 1);
  lg.model->append_features_from_prior(2, rng);
  CHECK(lg.model->num_features() == 5);
  const std::vector<std::size_t> drop{0, 1, 4};
  lg.model->remove_features(drop);
  CHECK(lg.model->num_features() == 2);
  CHECK(lg.model->params().v(0, 1) == kept);
}

TEST_CASE("alpha target includes the K log alpha term") {
  const auto z = FeatureMatrix::from_rows({{1, 1, 0}, {0, 1, 1}});
  const double a = 1.5, b = 2.5;
  const double diff = alpha_log_target(b, z) - alpha_log_target(a, z);
  const double h2 = 1.5;
  CHECK(diff == doctest::Approx(3.0 * std::log(b / a) - (b - a) * h2 - (b - a)).epsilon(1e-12));
}
