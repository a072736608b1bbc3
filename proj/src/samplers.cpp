#include "featalloc/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "featalloc/errors.hpp"
#include "featalloc/numeric.hpp"

namespace featalloc {

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::Gibbs:
      return "gibbs";
    case SamplerKind::RowGibbs:
      return "row_gibbs";
    case SamplerKind::ParticleGibbs:
      return "pg";
    case SamplerKind::Dpf:
      return "dpf";
  }
  return "unknown";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
  if (name == "gibbs") return SamplerKind::Gibbs;
  if (name == "row_gibbs" || name == "rg") return SamplerKind::RowGibbs;
  if (name == "pg") return SamplerKind::ParticleGibbs;
  if (name == "dpf") return SamplerKind::Dpf;
  throw ValidationError("unknown sampler '" + name + "'");
}

std::string to_string(TestPathStrategy strategy) {
  switch (strategy) {
    case TestPathStrategy::Conditional:
      return "conditional";
    case TestPathStrategy::Ones:
      return "ones";
    case TestPathStrategy::Random:
      return "random";
    case TestPathStrategy::TwoStage:
      return "two_stage";
    case TestPathStrategy::Unconditional:
      return "unconditional";
    case TestPathStrategy::Zeros:
      return "zeros";
  }
  return "unknown";
}

TestPathStrategy test_path_from_string(const std::string& name) {
  if (name == "conditional") return TestPathStrategy::Conditional;
  if (name == "ones") return TestPathStrategy::Ones;
  if (name == "random") return TestPathStrategy::Random;
  if (name == "two_stage") return TestPathStrategy::TwoStage;
  if (name == "unconditional") return TestPathStrategy::Unconditional;
  if (name == "zeros") return TestPathStrategy::Zeros;
  throw ValidationError("unknown test path strategy '" + name + "'");
}

void SamplerConfig::validate() const {
  require(n_particles >= 2, "SamplerConfig: n_particles must be at least 2");
  require(dpf_max_particles >= 2, "SamplerConfig: dpf_max_particles must be at least 2");
  require(resample_threshold >= 0.0 && resample_threshold <= 1.0,
          "SamplerConfig: resample_threshold must lie in [0, 1]");
  require(anneal_power >= 0.0, "SamplerConfig: anneal_power must be non-negative");
}

void RowStats::merge(const RowStats& other) {
  resample_events += other.resample_events;
  likelihood_evaluations += other.likelihood_evaluations;
  max_particles = std::max(max_particles, other.max_particles);
}

RowProblem make_row_problem(std::size_t n, const FeatureMatrix& z, const PriorSpec& prior,
                            const RowEvaluator& evaluator) {
  require(n < z.rows(), "make_row_problem: row out of range");
  RowProblem p;
  p.row = n;
  p.current.assign(z.row(n).begin(), z.row(n).end());
  p.rho.assign(z.cols(), 0.0);
  p.evaluator = &evaluator;
  const std::size_t n_cond = z.rows() - 1;
  const bool ibp = is_ibp(prior);
  for (std::size_t k = 0; k < z.cols(); ++k) {
    const std::size_t m = z.col_count_excluding(k, n);
    if (ibp && m == 0) continue;
    p.active.push_back(k);
    p.rho[k] = predictive_feature_prob(prior, m, n_cond);
  }
  return p;
}

double anneal_exponent(std::size_t t, std::size_t steps, double power) {
  if (power == 0.0 || t >= steps) return 1.0;
  return std::pow(static_cast<double>(t) / static_cast<double>(steps), power);
}

FeatureRow assemble_row(const RowProblem& problem, const Permutation& sigma,
                        std::span<const Bit> test_path, std::span<const Bit> prefix) {
  const std::size_t steps = problem.steps();
  require(sigma.size() == steps, "assemble_row: permutation size mismatch");
  require(prefix.size() <= steps, "assemble_row: prefix longer than the row");
  require(prefix.size() == steps || test_path.size() == steps,
          "assemble_row: test path length mismatch");
  FeatureRow row = problem.current;
  for (std::size_t s = 0; s < steps; ++s) {
    row[problem.active[sigma(s)]] = s < prefix.size() ? prefix[s] : test_path[s];
  }
  return row;
}

namespace {

double log_rho(const RowProblem& p, std::size_t col, Bit z) {
  return z ? std::log(p.rho[col]) : std::log1p(-p.rho[col]);
}

/// Shared per-row bookkeeping: step order, log ρ, annealing exponents and the
/// suffix states (fixed columns plus test-path bits after each step).
class StepContext {
 public:
  StepContext(const RowProblem& problem, const Permutation& sigma,
              std::span<const Bit> test_path, double anneal_power, RowStats* stats)
      : ev_(*problem.evaluator),
        steps_(problem.steps()),
        width_(ev_.state_size()),
        stats_(stats) {
    require(problem.evaluator != nullptr, "row kernel: missing evaluator");
    require(sigma.size() == steps_, "row kernel: permutation size mismatch");
    require(test_path.size() == steps_, "row kernel: test path length mismatch");
    order_.resize(steps_);
    cond_.resize(steps_);
    log_rho_.resize(2 * steps_);
    exponent_.resize(steps_);
    std::vector<char> active(problem.num_features(), 0);
    for (std::size_t t = 0; t < steps_; ++t) {
      const std::size_t col = problem.active[sigma(t)];
      active[col] = 1;
      order_[t] = col;
      cond_[t] = problem.current[col];
      log_rho_[2 * t] = log_rho(problem, col, 0);
      log_rho_[2 * t + 1] = log_rho(problem, col, 1);
      exponent_[t] = anneal_exponent(t + 1, steps_, anneal_power);
    }
    suffix_.assign((steps_ + 1) * width_, 0.0);
    auto last = suffix(steps_);
    ev_.clear(last);
    for (std::size_t k = 0; k < problem.num_features(); ++k) {
      if (!active[k] && problem.current[k]) ev_.add(last, k);
    }
    for (std::size_t t = steps_; t-- > 0;) {
      auto cur = suffix(t);
      std::copy(suffix(t + 1).begin(), suffix(t + 1).end(), cur.begin());
      if (test_path[t]) ev_.add(cur, order_[t]);
    }
    with_bit_.resize(width_);
    full_.resize(width_);
  }

  const RowEvaluator& evaluator() const { return ev_; }
  std::size_t steps() const { return steps_; }
  std::size_t width() const { return width_; }
  std::size_t column(std::size_t t) const { return order_[t]; }
  Bit conditional_bit(std::size_t t) const { return cond_[t]; }
  double log_rho_at(std::size_t t, Bit z) const { return log_rho_[2 * t + z]; }
  double exponent(std::size_t t) const { return exponent_[t]; }

  std::span<double> suffix(std::size_t t) { return {suffix_.data() + t * width_, width_}; }

  /// log p(x_n | prefix, z at step t, test path after t).
  double log_likelihood(std::span<const double> prefix, std::size_t t, Bit z) {
    if (stats_) ++stats_->likelihood_evaluations;
    if (z) {
      std::copy(prefix.begin(), prefix.end(), with_bit_.begin());
      ev_.add(with_bit_, order_[t]);
      ev_.merge(full_, with_bit_, suffix(t + 1));
    } else {
      ev_.merge(full_, prefix, suffix(t + 1));
    }
    return ev_.log_likelihood(full_);
  }

  /// State of prefix extended by z at step t, written to `out`.
  void extend(std::span<const double> prefix, std::size_t t, Bit z, std::span<double> out) const {
    std::copy(prefix.begin(), prefix.end(), out.begin());
    if (z) ev_.add(out, order_[t]);
  }

  FeatureRow finish(const RowProblem& problem, std::span<const Bit> path) const {
    FeatureRow row = problem.current;
    for (std::size_t t = 0; t < steps_; ++t) row[order_[t]] = path[t];
    return row;
  }

 private:
  const RowEvaluator& ev_;
  std::size_t steps_;
  std::size_t width_;
  RowStats* stats_;
  std::vector<std::size_t> order_;
  std::vector<Bit> cond_;
  std::vector<double> log_rho_;
  std::vector<double> exponent_;
  std::vector<double> suffix_;
  std::vector<double> with_bit_;
  std::vector<double> full_;
};

/// Per-generation record of sampled bits and ancestor indices.
struct Genealogy {
  std::vector<std::vector<Bit>> bits;
  std::vector<std::vector<std::size_t>> ancestors;

  std::vector<Bit> trace(std::size_t index) const {
    std::vector<Bit> path(bits.size());
    for (std::size_t t = bits.size(); t-- > 0;) {
      path[t] = bits[t][index];
      index = ancestors[t][index];
    }
    return path;
  }
};

std::vector<double> normalized(std::span<const double> log_w) {
  std::vector<double> w(log_w.size());
  normalize_log_weights(log_w, w);
  return w;
}

double relative_ess(std::span<const double> w) {
  double sq = 0.0;
  for (double x : w) sq += x * x;
  return 1.0 / (static_cast<double>(w.size()) * sq);
}

/// Sequential Monte Carlo over the row with a fully adapted proposal. When
/// `conditional` is set, particle 0 follows the current row and resampling
/// keeps it.
FeatureRow run_smc(const RowProblem& problem, StepContext& ctx, const SamplerConfig& config,
                   bool conditional, Rng& rng, RowStats* stats) {
  const std::size_t steps = ctx.steps();
  const std::size_t width = ctx.width();
  const std::size_t np = config.n_particles;
  if (stats) stats->max_particles = std::max(stats->max_particles, np);

  std::vector<double> cur(np * width), next(np * width);
  for (std::size_t i = 0; i < np; ++i) ctx.evaluator().clear({cur.data() + i * width, width});
  std::vector<double> log_prior(np, 0.0), log_gamma(np, 0.0), log_w(np, 0.0);
  std::vector<double> next_prior(np), next_gamma(np), next_w(np), prev_w(np, 0.0);
  std::vector<std::size_t> anc(np);
  Genealogy gen;
  gen.bits.assign(steps, std::vector<Bit>(np));
  gen.ancestors.assign(steps, std::vector<std::size_t>(np));

  for (std::size_t t = 0; t < steps; ++t) {
    std::iota(anc.begin(), anc.end(), std::size_t{0});
    if (t > 0) {
      const auto w = normalized(log_w);
      if (relative_ess(w) < config.resample_threshold) {
        if (conditional) {
          anc = conditional_multinomial_resample(w, rng);
        } else {
          for (auto& a : anc) a = rng.categorical(w);
        }
        std::fill(prev_w.begin(), prev_w.end(), 0.0);
        if (stats) ++stats->resample_events;
      } else {
        for (std::size_t i = 0; i < np; ++i) prev_w[i] = std::log(w[i]);
      }
    }
    const double e = ctx.exponent(t);
    for (std::size_t i = 0; i < np; ++i) {
      const std::size_t a = anc[i];
      std::span<const double> prefix(cur.data() + a * width, width);
      const double l0 = e * ctx.log_likelihood(prefix, t, 0) + log_prior[a] + ctx.log_rho_at(t, 0);
      const double l1 = e * ctx.log_likelihood(prefix, t, 1) + log_prior[a] + ctx.log_rho_at(t, 1);
      const double total = log_add_exp(l0, l1);
      if (total == kNegInf || std::isnan(total)) {
        throw DegenerateSupportError("particle extension has zero mass in both directions");
      }
      Bit z;
      if (conditional && i == 0) {
        z = ctx.conditional_bit(t);
        if ((z ? l1 : l0) == kNegInf) {
          throw DegenerateSupportError("conditional path has zero target mass");
        }
      } else {
        z = rng.bernoulli(std::exp(l1 - total)) ? 1 : 0;
      }
      ctx.extend(prefix, t, z, {next.data() + i * width, width});
      next_prior[i] = log_prior[a] + ctx.log_rho_at(t, z);
      next_gamma[i] = z ? l1 : l0;
      next_w[i] = (t == 0 ? 0.0 : prev_w[a]) + total - log_gamma[a];
      gen.bits[t][i] = z;
      gen.ancestors[t][i] = a;
    }
    std::swap(cur, next);
    std::swap(log_prior, next_prior);
    std::swap(log_gamma, next_gamma);
    std::swap(log_w, next_w);
  }
  const auto w = normalized(log_w);
  return ctx.finish(problem, gen.trace(rng.categorical(w)));
}

}  // namespace

TestPath make_test_path(TestPathStrategy strategy, const RowProblem& problem,
                        const Permutation& sigma, const SamplerConfig& config, Rng& rng,
                        RowStats* stats) {
  const std::size_t steps = problem.steps();
  require(sigma.size() == steps, "make_test_path: permutation size mismatch");
  TestPath path;
  path.burnin_only = is_burnin_only(strategy);
  path.bits.assign(steps, 0);
  auto conditional_bits = [&] {
    std::vector<Bit> bits(steps);
    for (std::size_t t = 0; t < steps; ++t) bits[t] = problem.current[problem.active[sigma(t)]];
    return bits;
  };
  auto pilot = [&](std::span<const Bit> pilot_path) {
    const FeatureRow row = unconditional_smc_row(problem, sigma, pilot_path, config, rng, stats);
    std::vector<Bit> bits(steps);
    for (std::size_t t = 0; t < steps; ++t) bits[t] = row[problem.active[sigma(t)]];
    return bits;
  };
  switch (strategy) {
    case TestPathStrategy::Zeros:
      break;
    case TestPathStrategy::Ones:
      std::fill(path.bits.begin(), path.bits.end(), Bit{1});
      break;
    case TestPathStrategy::Random:
      for (auto& b : path.bits) b = rng.bernoulli(0.5) ? 1 : 0;
      break;
    case TestPathStrategy::Conditional:
      path.bits = conditional_bits();
      break;
    case TestPathStrategy::Unconditional: {
      const std::vector<Bit> zeros(steps, 0);
      path.bits = pilot(zeros);
      break;
    }
    case TestPathStrategy::TwoStage: {
      const auto cond = conditional_bits();
      path.bits = pilot(cond);
      break;
    }
  }
  return path;
}

double smc_target_log_density(const RowProblem& problem, const Permutation& sigma,
                              std::span<const Bit> test_path, std::span<const Bit> prefix,
                              double anneal_power) {
  const std::size_t t = prefix.size();
  if (t == 0) return 0.0;
  const FeatureRow row = assemble_row(problem, sigma, test_path, prefix);
  double total = anneal_exponent(t, problem.steps(), anneal_power) * problem.evaluator->evaluate(row);
  for (std::size_t s = 0; s < t; ++s) total += log_rho(problem, problem.active[sigma(s)], prefix[s]);
  return total;
}

AdaptedStep adapted_proposal_and_weight(const RowProblem& problem, const Permutation& sigma,
                                        std::span<const Bit> test_path,
                                        std::span<const Bit> prefix, double anneal_power) {
  require(prefix.size() < problem.steps(), "adapted_proposal_and_weight: no step left");
  std::vector<Bit> ext(prefix.begin(), prefix.end());
  ext.push_back(0);
  const double l0 = smc_target_log_density(problem, sigma, test_path, ext, anneal_power);
  ext.back() = 1;
  const double l1 = smc_target_log_density(problem, sigma, test_path, ext, anneal_power);
  const double total = log_add_exp(l0, l1);
  if (total == kNegInf) throw DegenerateSupportError("both extensions have zero target mass");
  AdaptedStep out;
  out.prob_one = std::exp(l1 - total);
  out.log_weight =
      total - smc_target_log_density(problem, sigma, test_path, prefix, anneal_power);
  return out;
}

double dpf_incremental_log_weight(const RowProblem& problem, const Permutation& sigma,
                                  std::span<const Bit> test_path, std::span<const Bit> prefix,
                                  double anneal_power) {
  require(!prefix.empty(), "dpf_incremental_log_weight: empty prefix");
  return smc_target_log_density(problem, sigma, test_path, prefix, anneal_power) -
         smc_target_log_density(problem, sigma, test_path, prefix.first(prefix.size() - 1),
                                anneal_power);
}

FeatureRow element_wise_gibbs_row(const RowProblem& problem, const Permutation& sigma, Rng& rng,
                                  RowStats* stats) {
  const std::size_t steps = problem.steps();
  std::vector<Bit> current(steps);
  for (std::size_t t = 0; t < steps; ++t) current[t] = problem.current[problem.active[sigma(t)]];
  StepContext ctx(problem, sigma, current, 0.0, stats);
  std::vector<double> prefix(ctx.width()), scratch(ctx.width());
  ctx.evaluator().clear(prefix);
  std::vector<Bit> path(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const double l0 = ctx.log_likelihood(prefix, t, 0) + ctx.log_rho_at(t, 0);
    const double l1 = ctx.log_likelihood(prefix, t, 1) + ctx.log_rho_at(t, 1);
    const double total = log_add_exp(l0, l1);
    if (total == kNegInf || std::isnan(total)) {
      throw DegenerateSupportError("element-wise update has zero mass for both values");
    }
    path[t] = rng.bernoulli(std::exp(l1 - total)) ? 1 : 0;
    if (path[t]) {
      ctx.extend(prefix, t, 1, scratch);
      std::swap(prefix, scratch);
    }
  }
  return ctx.finish(problem, path);
}

std::vector<double> row_posterior_log_probs(const RowProblem& problem, std::size_t max_features,
                                            RowStats* stats) {
  const std::size_t steps = problem.steps();
  if (steps > max_features) {
    throw CapacityError("row-wise enumeration over " + std::to_string(steps) +
                        " features exceeds the limit of " + std::to_string(max_features) +
                        "; use the particle Gibbs or DPF sampler");
  }
  require(problem.evaluator != nullptr, "row_posterior_log_probs: missing evaluator");
  const RowEvaluator& ev = *problem.evaluator;
  const std::size_t width = ev.state_size();
  std::vector<double> states((steps + 1) * width);
  auto state = [&](std::size_t d) { return std::span<double>(states.data() + d * width, width); };
  ev.clear(state(0));
  std::vector<char> active(problem.num_features(), 0);
  for (std::size_t k : problem.active) active[k] = 1;
  for (std::size_t k = 0; k < problem.num_features(); ++k) {
    if (!active[k] && problem.current[k]) ev.add(state(0), k);
  }
  std::vector<double> lr0(steps), lr1(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    lr0[t] = log_rho(problem, problem.active[t], 0);
    lr1[t] = log_rho(problem, problem.active[t], 1);
  }
  std::vector<double> log_probs(std::size_t{1} << steps);
  std::function<void(std::size_t, std::size_t, double)> visit = [&](std::size_t depth,
                                                                   std::size_t index,
                                                                   double log_prior) {
    if (depth == steps) {
      log_probs[index] = ev.log_likelihood(state(steps)) + log_prior;
      return;
    }
    auto from = state(depth);
    auto to = state(depth + 1);
    std::copy(from.begin(), from.end(), to.begin());
    visit(depth + 1, index, log_prior + lr0[depth]);
    std::copy(from.begin(), from.end(), to.begin());
    ev.add(to, problem.active[depth]);
    visit(depth + 1, index | (std::size_t{1} << depth), log_prior + lr1[depth]);
  };
  visit(0, 0, 0.0);
  if (stats) stats->likelihood_evaluations += log_probs.size();
  const double total = log_sum_exp(log_probs);
  if (total == kNegInf || std::isnan(total)) {
    throw DegenerateSupportError("row conditional has zero mass everywhere");
  }
  for (double& lp : log_probs) lp -= total;
  return log_probs;
}

FeatureRow row_wise_gibbs_row(const RowProblem& problem, Rng& rng, std::size_t max_features,
                              RowStats* stats) {
  const auto log_probs = row_posterior_log_probs(problem, max_features, stats);
  std::vector<double> probs(log_probs.size());
  std::transform(log_probs.begin(), log_probs.end(), probs.begin(),
                 [](double lp) { return std::exp(lp); });
  const std::size_t index = rng.categorical(probs);
  FeatureRow row = problem.current;
  for (std::size_t t = 0; t < problem.steps(); ++t) row[problem.active[t]] = (index >> t) & 1U;
  return row;
}

std::vector<std::size_t> conditional_multinomial_resample(std::span<const double> w, Rng& rng) {
  require(!w.empty(), "conditional_multinomial_resample: empty weights");
  double total = 0.0;
  for (double x : w) {
    require(x >= 0.0, "conditional_multinomial_resample: negative weight");
    total += x;
  }
  require(std::abs(total - 1.0) < 1e-9, "conditional_multinomial_resample: weights not normalised");
  std::vector<std::size_t> anc(w.size(), 0);
  for (std::size_t i = 1; i < w.size(); ++i) anc[i] = rng.categorical(w);
  return anc;
}

FeatureRow particle_gibbs_row(const RowProblem& problem, const Permutation& sigma,
                              std::span<const Bit> test_path, const SamplerConfig& config,
                              Rng& rng, RowStats* stats) {
  config.validate();
  if (problem.steps() == 0) return problem.current;
  StepContext ctx(problem, sigma, test_path, config.anneal_power, stats);
  return run_smc(problem, ctx, config, true, rng, stats);
}

FeatureRow particle_gibbs_row(const RowProblem& problem, const Permutation& sigma,
                              const SamplerConfig& config, Rng& rng, RowStats* stats) {
  const TestPath path = make_test_path(config.test_path, problem, sigma, config, rng, stats);
  return particle_gibbs_row(problem, sigma, path.bits, config, rng, stats);
}

FeatureRow unconditional_smc_row(const RowProblem& problem, const Permutation& sigma,
                                 std::span<const Bit> test_path, const SamplerConfig& config,
                                 Rng& rng, RowStats* stats) {
  config.validate();
  if (problem.steps() == 0) return problem.current;
  StepContext ctx(problem, sigma, test_path, config.anneal_power, stats);
  return run_smc(problem, ctx, config, false, rng, stats);
}

double dpf_resample_constant(std::span<const double> w, std::size_t max_particles) {
  require(w.size() > max_particles, "resample_dpf: needs more particles than the target count");
  std::vector<double> sorted;
  for (double x : w) {
    require(x >= 0.0 && std::isfinite(x), "resample_dpf: invalid weight");
    if (x > 0.0) sorted.push_back(x);
  }
  if (sorted.size() <= max_particles) return std::numeric_limits<double>::infinity();
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  // With the k largest weights capped at one, Σ min(1, c w) = k + c * tail(k)
  // is linear in c; the root lies in the piece where the caps are consistent.
  std::vector<double> tail(sorted.size() + 1, 0.0);
  for (std::size_t i = sorted.size(); i-- > 0;) tail[i] = tail[i + 1] + sorted[i];
  const double m = static_cast<double>(max_particles);
  constexpr double kSlack = 1e-12;
  for (std::size_t k = 0; k < max_particles; ++k) {
    const double c = (m - static_cast<double>(k)) / tail[k];
    const bool below = c * sorted[k] <= 1.0 + kSlack;
    const bool above = k == 0 || c * sorted[k - 1] >= 1.0 - kSlack;
    if (below && above) return c;
  }
  throw DegenerateSupportError("resample_dpf: no root for the survivor constant");
}

DpfResample resample_dpf(std::span<const double> w, std::size_t max_particles, Rng& rng) {
  DpfResample out;
  out.c = dpf_resample_constant(w, max_particles);
  const double inv_c = std::isinf(out.c) ? 0.0 : 1.0 / out.c;
  out.ancestors.push_back(0);
  out.weights.push_back(std::max(w[0], inv_c));
  for (std::size_t i = 1; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    if (w[i] >= inv_c) {
      out.ancestors.push_back(i);
      out.weights.push_back(w[i]);
    } else if (out.c * w[i] >= rng.uniform()) {
      out.ancestors.push_back(i);
      out.weights.push_back(inv_c);
    }
  }
  const double total = std::accumulate(out.weights.begin(), out.weights.end(), 0.0);
  for (double& x : out.weights) x /= total;
  return out;
}

FeatureRow dpf_row(const RowProblem& problem, const Permutation& sigma,
                   std::span<const Bit> test_path, const SamplerConfig& config, Rng& rng,
                   RowStats* stats) {
  config.validate();
  const std::size_t steps = problem.steps();
  if (steps == 0) return problem.current;
  StepContext ctx(problem, sigma, test_path, config.anneal_power, stats);
  const std::size_t width = ctx.width();
  const RowEvaluator& ev = ctx.evaluator();

  std::vector<double> root(width);
  ev.clear(root);
  std::vector<double> cur, next;
  std::vector<double> log_prior, log_gamma, log_w;
  std::vector<double> next_prior, next_gamma, next_w;
  Genealogy gen;
  gen.bits.resize(steps);
  gen.ancestors.resize(steps);

  auto emit = [&](std::span<const double> prefix, std::size_t t, std::size_t a, Bit z,
                  double parent_prior, double parent_gamma, double parent_log_w) {
    const std::size_t j = next_prior.size();
    next.resize((j + 1) * width);
    std::span<double> out(next.data() + j * width, width);
    ctx.extend(prefix, t, z, out);
    const double lp = parent_prior + ctx.log_rho_at(t, z);
    double lg = kNegInf;
    if (parent_gamma != kNegInf) lg = ctx.exponent(t) * ctx.log_likelihood(prefix, t, z) + lp;
    next_prior.push_back(lp);
    next_gamma.push_back(lg);
    next_w.push_back(lg == kNegInf ? kNegInf : parent_log_w + lg - parent_gamma);
    gen.bits[t].push_back(z);
    gen.ancestors[t].push_back(a);
  };

  for (std::size_t t = 0; t < steps; ++t) {
    next.clear();
    next_prior.clear();
    next_gamma.clear();
    next_w.clear();
    const Bit c = ctx.conditional_bit(t);
    if (t == 0) {
      emit(root, 0, 0, c, 0.0, 0.0, 0.0);
      emit(root, 0, 0, 1 - c, 0.0, 0.0, 0.0);
    } else {
      const std::size_t count = log_w.size();
      const auto w = normalized(log_w);
      std::vector<std::size_t> survivors(count);
      std::vector<double> survivor_log_w(count);
      if (count > config.dpf_max_particles) {
        const DpfResample res = resample_dpf(w, config.dpf_max_particles, rng);
        survivors = res.ancestors;
        survivor_log_w.resize(survivors.size());
        for (std::size_t k = 0; k < survivors.size(); ++k) survivor_log_w[k] = std::log(res.weights[k]);
        if (stats) ++stats->resample_events;
      } else {
        std::iota(survivors.begin(), survivors.end(), std::size_t{0});
        for (std::size_t k = 0; k < count; ++k) survivor_log_w[k] = std::log(w[k]);
      }
      for (std::size_t k = 0; k < survivors.size(); ++k) {
        const std::size_t a = survivors[k];
        std::span<const double> prefix(cur.data() + a * width, width);
        if (k == 0) {
          emit(prefix, t, a, c, log_prior[a], log_gamma[a], survivor_log_w[k]);
          emit(prefix, t, a, 1 - c, log_prior[a], log_gamma[a], survivor_log_w[k]);
        } else {
          emit(prefix, t, a, 0, log_prior[a], log_gamma[a], survivor_log_w[k]);
          emit(prefix, t, a, 1, log_prior[a], log_gamma[a], survivor_log_w[k]);
        }
      }
    }
    if (next_gamma[0] == kNegInf) {
      throw DegenerateSupportError("conditional path has zero target mass");
    }
    std::swap(cur, next);
    std::swap(log_prior, next_prior);
    std::swap(log_gamma, next_gamma);
    std::swap(log_w, next_w);
    if (stats) stats->max_particles = std::max(stats->max_particles, log_w.size());
  }
  const auto w = normalized(log_w);
  return ctx.finish(problem, gen.trace(rng.categorical(w)));
}

FeatureRow dpf_row(const RowProblem& problem, const Permutation& sigma,
                   const SamplerConfig& config, Rng& rng, RowStats* stats) {
  const TestPath path = make_test_path(config.test_path, problem, sigma, config, rng, stats);
  return dpf_row(problem, sigma, path.bits, config, rng, stats);
}

FeatureRow update_row(SamplerKind kind, const RowProblem& problem, const SamplerConfig& config,
                      Rng& rng, RowStats* stats) {
  if (kind == SamplerKind::RowGibbs) {
    return row_wise_gibbs_row(problem, rng, config.max_enumeration_features, stats);
  }
  const Permutation sigma(rng.permutation(problem.steps()));
  switch (kind) {
    case SamplerKind::Gibbs:
      return element_wise_gibbs_row(problem, sigma, rng, stats);
    case SamplerKind::ParticleGibbs:
      return particle_gibbs_row(problem, sigma, config, rng, stats);
    case SamplerKind::Dpf:
      return dpf_row(problem, sigma, config, rng, stats);
    case SamplerKind::RowGibbs:
      break;
  }
  return problem.current;
}

}  // namespace featalloc
