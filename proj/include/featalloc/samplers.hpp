#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "featalloc/feature_matrix.hpp"
#include "featalloc/model.hpp"
#include "featalloc/prior.hpp"
#include "featalloc/rng.hpp"

namespace featalloc {

enum class SamplerKind { Gibbs, RowGibbs, ParticleGibbs, Dpf };

/// How the not-yet-sampled positions are filled when the likelihood is
/// evaluated part way through a row.
enum class TestPathStrategy { Conditional, Ones, Random, TwoStage, Unconditional, Zeros };

std::string to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);
std::string to_string(TestPathStrategy strategy);
TestPathStrategy test_path_from_string(const std::string& name);

/// Conditional and TwoStage paths depend on the current row and do not give a
/// valid Gibbs update.
inline bool is_burnin_only(TestPathStrategy s) {
  return s == TestPathStrategy::Conditional || s == TestPathStrategy::TwoStage;
}

struct SamplerConfig {
  std::size_t n_particles = 20;
  double resample_threshold = 0.5;
  double anneal_power = 1.0;
  std::size_t dpf_max_particles = 20;
  TestPathStrategy test_path = TestPathStrategy::Zeros;
  std::size_t max_enumeration_features = 25;

  /// Throws ContractViolation unless P >= 2, M >= 2, threshold in [0, 1], power >= 0.
  void validate() const;
};

struct RowStats {
  std::size_t resample_events = 0;
  std::size_t likelihood_evaluations = 0;
  std::size_t max_particles = 0;

  void merge(const RowStats& other);
};

/// Everything a row kernel needs to resample z_n with θ and the other rows
/// held fixed. Only `active` columns are resampled; all other entries of
/// `current` are kept (IBP singletons).
struct RowProblem {
  std::size_t row = 0;
  FeatureRow current;
  std::vector<std::size_t> active;
  std::vector<double> rho;  // indexed by column
  const RowEvaluator* evaluator = nullptr;

  std::size_t steps() const { return active.size(); }
  std::size_t num_features() const { return current.size(); }
};

/// ρ_{n,k} from the other rows of z; active columns are all columns under
/// FBB and the columns with m_k^{-n} > 0 under the IBP.
RowProblem make_row_problem(std::size_t n, const FeatureMatrix& z, const PriorSpec& prior,
                            const RowEvaluator& evaluator);

/// Likelihood exponent of the annealed target at step t of T; (t/T)^β, and 1
/// for β = 0.
double anneal_exponent(std::size_t t, std::size_t steps, double power);

/// Test path bits indexed by step (position t holds the value for column
/// active[σ(t)]).
struct TestPath {
  std::vector<Bit> bits;
  bool burnin_only = false;
};

TestPath make_test_path(TestPathStrategy strategy, const RowProblem& problem,
                        const Permutation& sigma, const SamplerConfig& config, Rng& rng,
                        RowStats* stats = nullptr);

/// Row with active[σ(s)] set to prefix[s] for s < |prefix|, test_path[s]
/// after that, and every inactive column taken from the current row.
FeatureRow assemble_row(const RowProblem& problem, const Permutation& sigma,
                        std::span<const Bit> test_path, std::span<const Bit> prefix);

/// log γ_t(prefix) for t = |prefix|, evaluated from scratch. Zero for t = 0.
double smc_target_log_density(const RowProblem& problem, const Permutation& sigma,
                              std::span<const Bit> test_path, std::span<const Bit> prefix,
                              double anneal_power);

struct AdaptedStep {
  double prob_one = 0.0;    // q_t(1 | prefix)
  double log_weight = 0.0;  // log Σ_z γ_t(prefix, z) - log γ_{t-1}(prefix)
};

/// Fully adapted proposal and incremental weight for step t = |prefix| + 1.
AdaptedStep adapted_proposal_and_weight(const RowProblem& problem, const Permutation& sigma,
                                        std::span<const Bit> test_path,
                                        std::span<const Bit> prefix, double anneal_power);

/// log γ_t(prefix) - log γ_{t-1}(prefix without its last bit), t = |prefix| >= 1.
double dpf_incremental_log_weight(const RowProblem& problem, const Permutation& sigma,
                                  std::span<const Bit> test_path, std::span<const Bit> prefix,
                                  double anneal_power);

/// Sequential single-site Gibbs over the active columns in σ order.
FeatureRow element_wise_gibbs_row(const RowProblem& problem, const Permutation& sigma, Rng& rng,
                                  RowStats* stats = nullptr);

/// Normalised log p(z_n | ...) over all 2^T settings of the active columns.
/// Bit s of the index is the value of active[s]. Throws CapacityError when
/// T exceeds `max_features`.
std::vector<double> row_posterior_log_probs(const RowProblem& problem,
                                            std::size_t max_features = 25,
                                            RowStats* stats = nullptr);

/// Exact draw from the row conditional by enumeration.
FeatureRow row_wise_gibbs_row(const RowProblem& problem, Rng& rng, std::size_t max_features = 25,
                              RowStats* stats = nullptr);

/// a_0 = 0, the rest i.i.d. categorical(w). `w` must sum to one.
std::vector<std::size_t> conditional_multinomial_resample(std::span<const double> w, Rng& rng);

/// Conditional SMC update; particle 0 carries the current row.
FeatureRow particle_gibbs_row(const RowProblem& problem, const Permutation& sigma,
                              std::span<const Bit> test_path, const SamplerConfig& config,
                              Rng& rng, RowStats* stats = nullptr);
FeatureRow particle_gibbs_row(const RowProblem& problem, const Permutation& sigma,
                              const SamplerConfig& config, Rng& rng, RowStats* stats = nullptr);

/// Plain SMC pass (no conditional particle) returning one draw from the
/// final particle approximation.
FeatureRow unconditional_smc_row(const RowProblem& problem, const Permutation& sigma,
                                 std::span<const Bit> test_path, const SamplerConfig& config,
                                 Rng& rng, RowStats* stats = nullptr);

struct DpfResample {
  std::vector<std::size_t> ancestors;  // ancestors[0] == 0
  std::vector<double> weights;         // normalised
  double c = 0.0;                      // +inf when every positive weight is kept
};

/// Root of Σ_i min(1, c w_i) = M. Requires more than M weights.
double dpf_resample_constant(std::span<const double> w, std::size_t max_particles);

DpfResample resample_dpf(std::span<const double> w, std::size_t max_particles, Rng& rng);

/// Conditional discrete particle filter update.
FeatureRow dpf_row(const RowProblem& problem, const Permutation& sigma,
                   std::span<const Bit> test_path, const SamplerConfig& config, Rng& rng,
                   RowStats* stats = nullptr);
FeatureRow dpf_row(const RowProblem& problem, const Permutation& sigma,
                   const SamplerConfig& config, Rng& rng, RowStats* stats = nullptr);

/// Dispatches to the kernel for `kind`, drawing a fresh σ for the sequential ones.
FeatureRow update_row(SamplerKind kind, const RowProblem& problem, const SamplerConfig& config,
                      Rng& rng, RowStats* stats = nullptr);

}  // namespace featalloc
