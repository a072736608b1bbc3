#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "featalloc/errors.hpp"
#include "featalloc/io.hpp"
#include "featalloc/numeric.hpp"
#include "featalloc/synth.hpp"

using namespace featalloc;

namespace {

SimSpec small_lg_spec(double missing = 0.0, std::uint64_t seed = 5) {
  SimSpec spec;
  spec.prior = FbbPrior{4, 1.0, 1.0};
  spec.rows = 30;
  spec.dims = 3;
  spec.missing_fraction = missing;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("zero missing fraction leaves every entry observed") {
  const auto sim = simulate(small_lg_spec());
  CHECK(sim.heldout.empty());
  const auto& x = std::get<RealData>(sim.data);
  CHECK(x.observed_count() == 30 * 3);
}

TEST_CASE("noiseless linear Gaussian data equals ZV") {
  auto spec = small_lg_spec();
  spec.tau_x = std::numeric_limits<double>::infinity();
  const auto sim = simulate(spec);
  const auto& x = std::get<RealData>(sim.data);
  const auto& p = std::get<LinearGaussianParams>(sim.params);
  for (std::size_t n = 0; n < x.rows; ++n) {
    for (std::size_t d = 0; d < x.cols; ++d) {
      double mean = 0.0;
      for (std::size_t k = 0; k < p.num_features; ++k) mean += sim.z(n, k) * p.v(k, d);
      CHECK(x.at(n, d) == mean);
    }
  }
}

TEST_CASE("toy override fixes Z and the feature values") {
  SimSpec spec;
  spec.prior = FbbPrior{2, 0.5, 1.0};
  spec.rows = 100;
  spec.dims = 1;
  spec.tau_v = 0.25;
  spec.tau_x = 25.0;
  FeatureMatrix z(100, 2);
  for (std::size_t n = 0; n < 100; ++n) z.set(n, n < 50 ? 0 : 1, 1);
  spec.z = z;
  spec.feature_values = std::vector<double>{100.0, 100.0};
  const auto sim = simulate(spec);
  CHECK(sim.z == z);
  CHECK(std::get<LinearGaussianParams>(sim.params).features == std::vector<double>{100.0, 100.0});
  const auto& x = std::get<RealData>(sim.data);
  for (std::size_t n = 0; n < 100; ++n) CHECK(std::abs(x.at(n, 0) - 100.0) < 5.0 * 0.2);
}

TEST_CASE("masking a tenth of a 1000 x 10 matrix removes exactly 1000 entries") {
  SimSpec spec;
  spec.prior = FbbPrior{3, 1.0, 1.0};
  spec.rows = 1000;
  spec.dims = 10;
  spec.seed = 9;
  const auto full = simulate(spec);
  spec.missing_fraction = 0.1;
  const auto masked = simulate(spec);
  REQUIRE(masked.heldout.size() == 1000);
  const auto& x = std::get<RealData>(masked.data);
  const auto& x_full = std::get<RealData>(full.data);
  CHECK(x.observed_count() == 9000);
  std::vector<int> hits(10000, 0);
  for (const auto& e : masked.heldout) {
    CHECK_FALSE(x.is_observed(e.row, e.col));
    CHECK(e.value == x_full.at(e.row, e.col));
    ++hits[e.row * 10 + e.col];
  }
  for (std::size_t i = 0; i < hits.size(); ++i) {
    CHECK((hits[i] == 1) != (x.observed[i] == 1));
  }
  const auto restored = std::get<RealData>(restore_heldout(masked.data, masked.heldout));
  CHECK(restored.values == x_full.values);
  CHECK(restored.observed_count() == 10000);
}

TEST_CASE("mask_missing rejects a full mask") {
  Dataset data = RealData(2, 2);
  Rng rng(1);
  CHECK_THROWS_AS(mask_missing(data, 1.0, rng), ContractViolation);
  CHECK(mask_missing(data, 0.0, rng).empty());
}

TEST_CASE("same spec and seed give bit-identical datasets") {
  for (auto model : {ModelKind::LinearGaussian, ModelKind::Lfrm, ModelKind::PyClone}) {
    auto spec = small_lg_spec(0.2, 17);
    spec.model = model;
    const auto a = dataset_to_json(to_document(simulate(spec))).dump();
    const auto b = dataset_to_json(to_document(simulate(spec))).dump();
    CHECK(a == b);
    spec.seed = 18;
    CHECK(dataset_to_json(to_document(simulate(spec))).dump() != a);
  }
}

TEST_CASE("fbb column means follow the Beta usage probabilities") {
  const double a = 2.0;
  const double b = 3.0;
  const std::size_t rows = 10000;
  const std::size_t cols = 2000;
  Rng rng(21);
  const auto z = draw_feature_matrix(FbbPrior{cols, a, b}, rows, rng);
  std::vector<double> means(cols);
  for (std::size_t k = 0; k < cols; ++k) {
    means[k] = static_cast<double>(z.col_count(k)) / static_cast<double>(rows);
  }
  const double beta_mean = a / (a + b);
  const double beta_var = a * b / ((a + b) * (a + b) * (a + b + 1.0));
  // Var of a column mean: Beta variance plus the binomial noise E[p(1-p)]/N.
  const double var = beta_var + (beta_mean * (1.0 - beta_mean) - beta_var) / rows;
  const double mean = std::accumulate(means.begin(), means.end(), 0.0) / cols;
  CHECK(std::abs(mean - beta_mean) < 3.0 * std::sqrt(var / cols));
  double ss = 0.0;
  for (double m : means) ss += (m - mean) * (m - mean);
  const double sample_var = ss / (cols - 1);
  // Beta(2, 3) has excess kurtosis -0.5; the variance estimate's sd is
  // sqrt((2 + excess) / n) * var.
  CHECK(std::abs(sample_var - var) < 3.0 * std::sqrt(1.5 / cols) * var);
}

TEST_CASE("ibp feature count has mean alpha times the harmonic number") {
  const double alpha = 2.0;
  const std::size_t rows = 50;
  const int draws = 2000;
  double harmonic = 0.0;
  for (std::size_t n = 1; n <= rows; ++n) harmonic += 1.0 / static_cast<double>(n);
  Rng rng(4);
  double total = 0.0;
  for (int i = 0; i < draws; ++i) {
    total += static_cast<double>(draw_feature_matrix(IbpPrior{alpha}, rows, rng).cols());
  }
  const double expected = alpha * harmonic;
  CHECK(std::abs(total / draws - expected) < 3.0 * std::sqrt(expected / draws));
}

TEST_CASE("ibp simulation with a vanishing alpha gives up after the retry bound") {
  SimSpec spec = small_lg_spec();
  spec.prior = IbpPrior{1e-12};
  spec.max_attempts = 5;
  CHECK_THROWS_AS(simulate(spec), DegenerateSupportError);
  spec.prior = IbpPrior{3.0};
  CHECK(simulate(spec).z.cols() > 0);
}

TEST_CASE("simulation settings are validated") {
  auto spec = small_lg_spec();
  spec.missing_fraction = 1.0;
  CHECK_THROWS_AS(simulate(spec), ValidationError);
  spec = small_lg_spec();
  spec.model = ModelKind::PyClone;
  spec.prior = IbpPrior{2.0};
  CHECK_THROWS_AS(simulate(spec), ValidationError);
  spec = small_lg_spec();
  spec.rows = 0;
  CHECK_THROWS_AS(simulate(spec), ValidationError);
  spec = small_lg_spec();
  spec.feature_values = std::vector<double>{1.0};
  CHECK_THROWS_AS(simulate(spec), ValidationError);
  spec = small_lg_spec();
  spec.z = FeatureMatrix(30, 3);
  CHECK_THROWS_AS(simulate(spec), ValidationError);
}

TEST_CASE("generating log density of a linear Gaussian dataset") {
  const auto sim = simulate(small_lg_spec(0.25, 3));
  const auto& p = std::get<LinearGaussianParams>(sim.params);
  const auto& x = std::get<RealData>(sim.data);
  const auto prior = std::get<FbbPrior>(sim.prior);
  auto log_normal = [](double v, double mean, double prec) {
    return 0.5 * std::log(prec / (2.0 * M_PI)) - 0.5 * prec * (v - mean) * (v - mean);
  };
  auto log_gamma_pdf = [](double v, double shape, double rate) {
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(v) - rate * v;
  };
  double expected = 0.0;
  for (std::size_t k = 0; k < p.num_features; ++k) {
    const double m = static_cast<double>(sim.z.col_count(k));
    const double n = static_cast<double>(sim.z.rows());
    expected += std::lgamma(m + prior.a) + std::lgamma(n - m + prior.b) -
                std::lgamma(n + prior.a + prior.b) + std::lgamma(prior.a + prior.b) -
                std::lgamma(prior.a) - std::lgamma(prior.b);
    for (std::size_t d = 0; d < p.dims; ++d) expected += log_normal(p.v(k, d), 0.0, p.tau_v);
  }
  expected += log_gamma_pdf(p.tau_v, 1.0, 1.0) + log_gamma_pdf(p.tau_x, 1.0, 1.0);
  for (std::size_t n = 0; n < x.rows; ++n) {
    for (std::size_t d = 0; d < x.cols; ++d) {
      if (!x.is_observed(n, d)) continue;
      double mean = 0.0;
      for (std::size_t k = 0; k < p.num_features; ++k) mean += sim.z(n, k) * p.v(k, d);
      expected += log_normal(x.at(n, d), mean, p.tau_x);
    }
  }
  CHECK(sim.log_density == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("symmetric relational data is symmetric") {
  SimSpec spec;
  spec.model = ModelKind::Lfrm;
  spec.prior = FbbPrior{3, 1.0, 1.0};
  spec.rows = 25;
  spec.symmetric = true;
  const auto sim = simulate(spec);
  const auto& x = std::get<RelationData>(sim.data);
  for (std::size_t i = 0; i < 25; ++i) {
    for (std::size_t j = 0; j < 25; ++j) CHECK(x.at(i, j) == x.at(j, i));
  }
  CHECK(std::get<LfrmParams>(sim.params).symmetric);
}

TEST_CASE("PyClone counts respect their depths") {
  SimSpec spec;
  spec.model = ModelKind::PyClone;
  spec.prior = FbbPrior{4, 1.0, 1.0};
  spec.rows = 200;
  spec.dims = 4;
  const auto sim = simulate(spec);
  const auto& c = std::get<CountData>(sim.data);
  double depth = 0.0;
  for (std::size_t i = 0; i < c.variant_reads.values.size(); ++i) {
    CHECK(c.variant_reads.values[i] >= 0);
    CHECK(c.variant_reads.values[i] <= c.depth.values[i]);
    depth += c.depth.values[i];
  }
  const double count = static_cast<double>(c.depth.values.size());
  CHECK(std::abs(depth / count - 100.0) < 3.0 * std::sqrt(100.0 / count));
  CHECK(std::isfinite(sim.log_density));
}

TEST_CASE("dataset documents round-trip through JSON") {
  for (auto model : {ModelKind::LinearGaussian, ModelKind::Lfrm, ModelKind::PyClone}) {
    auto spec = small_lg_spec(0.15, 31);
    spec.model = model;
    const auto sim = simulate(spec);
    const auto json = dataset_to_json(to_document(sim));
    const auto doc = dataset_from_json(Json::parse(json.dump()));
    CHECK(doc.model() == model);
    CHECK(dataset_to_json(doc).dump() == json.dump());
    REQUIRE(doc.truth);
    CHECK(doc.truth->z == sim.z);
    CHECK(doc.truth->log_density == sim.log_density);
    CHECK(generating_log_density(*doc.truth) == doctest::Approx(sim.log_density).epsilon(1e-12));
  }
}

TEST_CASE("malformed dataset documents are rejected") {
  const auto good = dataset_to_json(to_document(simulate(small_lg_spec())));
  auto bad = good;
  bad["format"] = "something-else";
  CHECK_THROWS_AS(dataset_from_json(bad), ValidationError);
  bad = good;
  bad["shape"]["rows"] = 31;
  CHECK_THROWS_AS(dataset_from_json(bad), ValidationError);
  bad = good;
  bad["extra"] = 1;
  CHECK_THROWS_AS(dataset_from_json(bad), ValidationError);
  bad = good;
  bad["truth"]["z"][0][0] = 2;
  CHECK_THROWS_AS(dataset_from_json(bad), ValidationError);
  bad = good;
  bad["data"][0][0] = "text";
  CHECK_THROWS_AS(dataset_from_json(bad), ValidationError);
}

TEST_CASE("simulation settings round-trip through JSON") {
  auto spec = small_lg_spec(0.1, 77);
  spec.z = FeatureMatrix(30, 4);
  spec.feature_values = std::vector<double>(12, 1.5);
  const auto back = sim_spec_from_json(sim_spec_to_json(spec));
  CHECK(sim_spec_to_json(back) == sim_spec_to_json(spec));
  CHECK_THROWS_AS(sim_spec_from_json(Json{{"rows", 10}, {"bogus", 1}}), ValidationError);
  CHECK_THROWS_AS(sim_spec_from_json(Json{{"model", "nope"}}), ValidationError);
}
