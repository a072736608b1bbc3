#include <doctest.h>

#include <cmath>
#include <fstream>

#include "featalloc/errors.hpp"
#include "featalloc/io.hpp"
#include "featalloc/metrics.hpp"
#include "featalloc/rng.hpp"

using namespace featalloc;

namespace {

Json stat_fixtures() { return read_json(FEATALLOC_FIXTURE_DIR "/stat_tables.json"); }

FeatureMatrix random_allocation(std::size_t rows, std::size_t cols, Rng& rng) {
  FeatureMatrix z(rows, cols);
  for (std::size_t n = 0; n < rows; ++n) {
    for (std::size_t k = 0; k < cols; ++k) z.set(n, k, rng.bernoulli(0.4));
  }
  return z;
}

}  // namespace

TEST_CASE("relative log density") {
  CHECK(relative_log_density(-50.0, -50.0) == 0.0);
  CHECK(relative_log_density(-110.0, -100.0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(relative_log_density(-90.0, -100.0) == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK_THROWS_AS(relative_log_density(-1.0, 0.0), ContractViolation);
  const double ref = -321.5;
  const double a = relative_log_density(-400.0, ref);
  const double b = relative_log_density(-300.0, ref);
  const double c = relative_log_density(-350.0, ref);
  CHECK(c == doctest::Approx(0.5 * (a + b)).epsilon(1e-14));
}

TEST_CASE("rmse examples") {
  const std::vector<double> truth{1.0, 2.0};
  CHECK(rmse(truth, truth) == 0.0);
  CHECK(rmse(std::vector<double>{4.0, 6.0}, truth) == doctest::Approx(std::sqrt(12.5)));
  CHECK(rmse(std::vector<double>{-1.5, -0.5}, truth) == doctest::Approx(2.5));
  CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), ContractViolation);
  CHECK_THROWS_AS(rmse(std::vector<double>{1.0}, truth), ContractViolation);
}

TEST_CASE("held-out rmse uses the row reconstruction") {
  LinearGaussianParams p;
  p.num_features = 2;
  p.dims = 2;
  p.features = {1.0, 2.0, 10.0, 20.0};
  const auto z = FeatureMatrix::from_rows({{1, 0}, {1, 1}});
  const std::vector<HeldOutEntry> heldout{{0, 1, 2.0}, {1, 0, 14.0}};
  // Predictions 2 and 11: errors 0 and 3.
  CHECK(rmse_heldout(p, z, heldout) == doctest::Approx(std::sqrt(4.5)));
  CHECK_THROWS_AS(rmse_heldout(p, z, std::vector<HeldOutEntry>{}), ContractViolation);
}

TEST_CASE("relational reconstruction error") {
  LfrmParams p;
  p.num_features = 1;
  p.weights = {8.0};
  const auto z = FeatureMatrix::from_rows({{1}, {1}, {0}, {0}});
  RelationData x(4, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) x.at(i, j) = z(i, 0) && z(j, 0);
  }
  CHECK(lfrm_reconstruction_error(p, z, x) == 0.0);
  x.at(3, 2) = 1;
  CHECK(lfrm_reconstruction_error(p, z, x) == doctest::Approx(1.0 / 16.0));

  p.weights = {0.0};
  RelationData balanced(4, 4);
  for (std::size_t i = 0; i < 16; ++i) balanced.values[i] = i % 2;
  CHECK(lfrm_reconstruction_error(p, z, balanced) == doctest::Approx(0.5));

  RelationData masked = balanced;
  masked.observed[1] = 0;
  masked.values[1] = 0;
  CHECK_THROWS_AS(lfrm_reconstruction_error(p, z, masked), ContractViolation);
  const std::vector<HeldOutEntry> heldout{{0, 1, 1.0}};
  CHECK(lfrm_reconstruction_error(p, z, masked, heldout) == doctest::Approx(0.5));
}

TEST_CASE("bcubed hand-computed pair table") {
  const auto inferred = FeatureMatrix::from_rows({{1, 0}, {1, 1}, {0, 1}});
  const auto truth = FeatureMatrix::from_rows({{1, 0}, {1, 0}, {0, 1}});
  const auto m = bcubed_fmeasure(inferred, truth);
  CHECK(m.precision == doctest::Approx(4.5 / 7.0).epsilon(1e-14));
  CHECK(m.recall == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m.f == doctest::Approx(18.0 / 23.0).epsilon(1e-14));
}

TEST_CASE("bcubed degenerate and identical allocations") {
  const auto truth = FeatureMatrix::from_rows({{1, 0}, {1, 1}, {0, 1}});
  const auto same = bcubed_fmeasure(truth, truth);
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);
  CHECK(same.f == 1.0);
  const auto empty = bcubed_fmeasure(FeatureMatrix(3, 2), truth);
  CHECK(empty.precision == 0.0);
  CHECK(empty.recall == 0.0);
  CHECK(empty.f == 0.0);
  CHECK_THROWS_AS(bcubed_fmeasure(FeatureMatrix(2, 1), truth), ContractViolation);
}

TEST_CASE("bcubed is invariant to column permutations and F is the harmonic mean") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rows = 2 + rng.uniform_index(6);
    const auto a = random_allocation(rows, 1 + rng.uniform_index(4), rng);
    const auto b = random_allocation(rows, 1 + rng.uniform_index(4), rng);
    const auto base = bcubed_fmeasure(a, b);
    const auto pa = bcubed_fmeasure(a.permute_cols(Permutation(rng.permutation(a.cols()))),
                                    b.permute_cols(Permutation(rng.permutation(b.cols()))));
    CHECK(pa.precision == doctest::Approx(base.precision).epsilon(1e-14));
    CHECK(pa.recall == doctest::Approx(base.recall).epsilon(1e-14));
    CHECK(base.precision >= 0.0);
    CHECK(base.precision <= 1.0);
    CHECK(base.recall >= 0.0);
    CHECK(base.recall <= 1.0);
    if (base.precision + base.recall > 0.0) {
      const double h = 2.0 * base.precision * base.recall / (base.precision + base.recall);
      CHECK(std::abs(base.f - h) < 1e-12);
    }
  }
}

TEST_CASE("ranks average over ties") {
  const ScoreTable t{{1.0, 5.0}, {1.0, 2.0}, {0.5, 2.0}};
  const auto r = block_ranks(t);
  CHECK(r[0] == std::vector<double>{2.5, 3.0});
  CHECK(r[1] == std::vector<double>{2.5, 1.5});
  CHECK(r[2] == std::vector<double>{1.0, 1.5});
  CHECK(mean_ranks(t) == std::vector<double>{2.75, 2.0, 1.25});
}

TEST_CASE("friedman on identical methods is null") {
  const ScoreTable t{{1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}};
  const auto f = friedman_test(t);
  CHECK(f.statistic == 0.0);
  CHECK(f.p_value == 1.0);
  const auto p = nemenyi_posthoc(t);
  CHECK(p[0][1] == 1.0);
  CHECK_THROWS_AS(friedman_test(ScoreTable{{1.0, 2.0}}), ContractViolation);
  CHECK_THROWS_AS(friedman_test(ScoreTable{{1.0}, {2.0}}), ContractViolation);
  CHECK_THROWS_AS(friedman_test(ScoreTable{{1.0, 2.0}, {1.0}}), ContractViolation);
}

TEST_CASE("friedman and nemenyi match the reference tables") {
  const auto fixtures = stat_fixtures();
  REQUIRE(fixtures.size() == 3);
  for (const auto& item : fixtures.items()) {
    CAPTURE(item.key());
    const auto& fx = item.value();
    const auto table = fx.at("scores").get<ScoreTable>();
    const auto f = friedman_test(table);
    CHECK(std::abs(f.statistic - fx.at("friedman_statistic").get<double>()) < 1e-8);
    CHECK(std::abs(f.p_value - fx.at("friedman_p").get<double>()) < 1e-8);
    const auto ranks = mean_ranks(table);
    const auto ref_ranks = fx.at("mean_ranks").get<std::vector<double>>();
    for (std::size_t i = 0; i < ranks.size(); ++i) CHECK(std::abs(ranks[i] - ref_ranks[i]) < 1e-12);
    const auto p = nemenyi_posthoc(table);
    const auto ref = fx.at("nemenyi_p").get<std::vector<std::vector<double>>>();
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = 0; j < p.size(); ++j) {
        CHECK(std::abs(p[i][j] - ref[i][j]) < 1e-8);
        CHECK(p[i][j] == p[j][i]);
      }
      CHECK(p[i][i] == 1.0);
    }
  }
}

TEST_CASE("friedman statistic ignores method order and monotone rescaling") {
  const auto table = stat_fixtures().at("five_by_twelve").at("scores").get<ScoreTable>();
  const double base = friedman_test(table).statistic;
  ScoreTable permuted{table[3], table[0], table[4], table[2], table[1]};
  CHECK(friedman_test(permuted).statistic == doctest::Approx(base).epsilon(1e-14));
  const auto ranks = mean_ranks(table);
  const auto pr = mean_ranks(permuted);
  CHECK(pr[0] == ranks[3]);
  CHECK(pr[1] == ranks[0]);
  ScoreTable transformed = table;
  for (auto& row : transformed) {
    for (double& v : row) v = std::exp(3.0 * v) - 7.0;
  }
  CHECK(friedman_test(transformed).statistic == doctest::Approx(base).epsilon(1e-14));
}
