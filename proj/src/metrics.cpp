#include "featalloc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "featalloc/errors.hpp"
#include "featalloc/numeric.hpp"

namespace featalloc {

double relative_log_density(double log_density, double reference) {
  require(reference != 0.0, "relative_log_density: reference log density is zero");
  return (log_density - reference) / reference;
}

double rmse(std::span<const double> predictions, std::span<const double> truth) {
  require(!truth.empty(), "rmse: no entries");
  require(predictions.size() == truth.size(), "rmse: size mismatch");
  double ss = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double r = predictions[i] - truth[i];
    ss += r * r;
  }
  return std::sqrt(ss / static_cast<double>(truth.size()));
}

double rmse_heldout(const LinearGaussianParams& params, const FeatureMatrix& z,
                    std::span<const HeldOutEntry> heldout) {
  require(params.num_features == z.cols(), "rmse_heldout: parameter and allocation widths differ");
  std::vector<double> predictions;
  std::vector<double> truth;
  for (const auto& e : heldout) {
    require(e.row < z.rows() && e.col < params.dims, "rmse_heldout: entry out of range");
    double mean = 0.0;
    for (std::size_t k = 0; k < params.num_features; ++k) {
      if (z(e.row, k)) mean += params.v(k, e.col);
    }
    predictions.push_back(mean);
    truth.push_back(e.value);
  }
  return rmse(predictions, truth);
}

double lfrm_reconstruction_error(const LfrmParams& params, const FeatureMatrix& z,
                                 const RelationData& complete) {
  const std::size_t n_rows = complete.rows;
  require(complete.cols == n_rows && z.rows() == n_rows, "lfrm_reconstruction_error: shape mismatch");
  require(params.num_features == z.cols(),
          "lfrm_reconstruction_error: parameter and allocation widths differ");
  require(complete.observed_count() == n_rows * n_rows,
          "lfrm_reconstruction_error: relation has missing entries");
  const std::size_t k_total = params.num_features;
  // u_i = z_i' W, so the logit of (i, j) is u_i . z_j.
  std::vector<double> u(n_rows * k_total, 0.0);
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t k = 0; k < k_total; ++k) {
      if (!z(i, k)) continue;
      for (std::size_t l = 0; l < k_total; ++l) u[i * k_total + l] += params.w(k, l);
    }
  }
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t j = 0; j < n_rows; ++j) {
      double logit = 0.0;
      for (std::size_t l = 0; l < k_total; ++l) {
        if (z(j, l)) logit += u[i * k_total + l];
      }
      const bool predicted = logit > 0.0;
      wrong += predicted != (complete.at(i, j) != 0);
    }
  }
  return static_cast<double>(wrong) / static_cast<double>(n_rows * n_rows);
}

double lfrm_reconstruction_error(const LfrmParams& params, const FeatureMatrix& z,
                                 const RelationData& data, std::span<const HeldOutEntry> heldout) {
  RelationData complete = data;
  for (const auto& e : heldout) {
    require(e.row < data.rows && e.col < data.cols, "lfrm_reconstruction_error: entry out of range");
    complete.at(e.row, e.col) = e.value != 0.0;
    complete.observed[e.row * data.cols + e.col] = 1;
  }
  return lfrm_reconstruction_error(params, z, complete);
}

BCubed bcubed_fmeasure(const FeatureMatrix& inferred, const FeatureMatrix& truth) {
  require(inferred.rows() == truth.rows(), "bcubed_fmeasure: row counts differ");
  const std::size_t n_rows = truth.rows();
  auto shared = [](const FeatureMatrix& z, std::size_t a, std::size_t b) {
    std::size_t count = 0;
    for (std::size_t k = 0; k < z.cols(); ++k) count += z(a, k) && z(b, k);
    return static_cast<double>(count);
  };
  double precision_sum = 0.0;
  double recall_sum = 0.0;
  std::size_t precision_pairs = 0;
  std::size_t recall_pairs = 0;
  for (std::size_t a = 0; a < n_rows; ++a) {
    for (std::size_t b = 0; b < n_rows; ++b) {
      const double r = shared(inferred, a, b);
      const double g = shared(truth, a, b);
      const double overlap = std::min(r, g);
      if (r > 0.0) {
        precision_sum += overlap / r;
        ++precision_pairs;
      }
      if (g > 0.0) {
        recall_sum += overlap / g;
        ++recall_pairs;
      }
    }
  }
  BCubed out;
  out.precision = precision_pairs ? precision_sum / static_cast<double>(precision_pairs) : 0.0;
  out.recall = recall_pairs ? recall_sum / static_cast<double>(recall_pairs) : 0.0;
  const double denom = out.precision + out.recall;
  out.f = denom > 0.0 ? 2.0 * out.precision * out.recall / denom : 0.0;
  return out;
}

namespace {

void check_table(const ScoreTable& scores, const char* what) {
  require(scores.size() >= 2, std::string(what) + ": need at least two methods");
  const std::size_t blocks = scores.front().size();
  require(blocks >= 2, std::string(what) + ": need at least two blocks");
  for (const auto& row : scores) {
    require(row.size() == blocks, std::string(what) + ": ragged score table");
    for (double v : row) require(!std::isnan(v), std::string(what) + ": NaN score");
  }
}

}  // namespace

ScoreTable block_ranks(const ScoreTable& scores) {
  const std::size_t k = scores.size();
  const std::size_t n = k ? scores.front().size() : 0;
  ScoreTable ranks(k, std::vector<double>(n, 0.0));
  std::vector<std::size_t> order(k);
  for (std::size_t b = 0; b < n; ++b) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return scores[x][b] < scores[y][b]; });
    for (std::size_t i = 0; i < k;) {
      std::size_t j = i;
      while (j + 1 < k && scores[order[j + 1]][b] == scores[order[i]][b]) ++j;
      const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t t = i; t <= j; ++t) ranks[order[t]][b] = rank;
      i = j + 1;
    }
  }
  return ranks;
}

std::vector<double> mean_ranks(const ScoreTable& scores) {
  const auto ranks = block_ranks(scores);
  std::vector<double> out;
  for (const auto& row : ranks) {
    out.push_back(std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size()));
  }
  return out;
}

FriedmanResult friedman_test(const ScoreTable& scores) {
  check_table(scores, "friedman_test");
  const double k = static_cast<double>(scores.size());
  const double n = static_cast<double>(scores.front().size());
  const auto ranks = block_ranks(scores);
  double sum_sq = 0.0;
  for (const auto& row : ranks) {
    const double r = std::accumulate(row.begin(), row.end(), 0.0);
    sum_sq += r * r;
  }
  // Tie correction: 1 - Σ (t³ - t) / (n k (k² - 1)) over tie groups.
  double ties = 0.0;
  std::vector<double> block(scores.size());
  for (std::size_t b = 0; b < scores.front().size(); ++b) {
    for (std::size_t m = 0; m < scores.size(); ++m) block[m] = scores[m][b];
    std::sort(block.begin(), block.end());
    for (std::size_t i = 0; i < block.size();) {
      std::size_t j = i;
      while (j + 1 < block.size() && block[j + 1] == block[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      ties += t * t * t - t;
      i = j + 1;
    }
  }
  const double correction = 1.0 - ties / (n * k * (k * k - 1.0));
  FriedmanResult out;
  if (correction <= 0.0) return out;
  out.statistic = (12.0 / (n * k * (k + 1.0)) * sum_sq - 3.0 * n * (k + 1.0)) / correction;
  out.statistic = std::max(out.statistic, 0.0);
  out.p_value = chi_square_sf(out.statistic, k - 1.0);
  return out;
}

std::vector<std::vector<double>> nemenyi_posthoc(const ScoreTable& scores) {
  check_table(scores, "nemenyi_posthoc");
  const std::size_t k = scores.size();
  const double kd = static_cast<double>(k);
  const double n = static_cast<double>(scores.front().size());
  const auto r = mean_ranks(scores);
  const double se = std::sqrt(kd * (kd + 1.0) / (6.0 * n));
  const double pairs = kd * (kd - 1.0) / 2.0;
  std::vector<std::vector<double>> p(k, std::vector<double>(k, 1.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double z = std::abs(r[i] - r[j]) / se;
      const double value = std::min(1.0, pairs * 2.0 * normal_sf(z));
      p[i][j] = value;
      p[j][i] = value;
    }
  }
  return p;
}

}  // namespace featalloc
