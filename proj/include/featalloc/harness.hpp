#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "featalloc/chain.hpp"
#include "featalloc/io.hpp"
#include "featalloc/samplers.hpp"
#include "featalloc/synth.hpp"

namespace featalloc {

enum class InitMode { Random, Truth };

std::string to_string(InitMode mode);
InitMode init_mode_from_string(const std::string& name);

/// One method on a grid of n_datasets x n_inits x n_restarts chains. Chains
/// with the same master seed and grid see the same datasets and initial
/// states whatever the sampler, so traces align across methods.
struct ExperimentConfig {
  std::string method;  // label in traces and reports; defaults to the sampler name
  std::optional<SimSpec> sim;
  std::optional<std::filesystem::path> dataset_path;
  /// Prior used for fitting; defaults to the generating prior.
  std::optional<PriorSpec> prior;
  SamplerKind sampler = SamplerKind::ParticleGibbs;
  SamplerConfig sampler_config;
  SingletonUpdate singletons = SingletonUpdate::MetropolisHastings;
  std::size_t n_datasets = 4;
  std::size_t n_inits = 4;
  std::size_t n_restarts = 5;
  double time_budget_s = 10.0;
  double record_interval_s = 1.0;
  /// Iteration-budget mode: exactly this many sweeps, recorded every
  /// `record_every` sweeps; the time budget is ignored.
  std::optional<std::size_t> max_iterations;
  std::size_t record_every = 1;
  /// Sweeps after which a burn-in-only test path is replaced by Zeros.
  std::optional<std::size_t> burnin_sweeps;
  InitMode init_z = InitMode::Random;
  InitMode init_params = InitMode::Random;
  bool fixed_params = false;
  bool update_alpha = true;
  std::uint64_t seed = 0;

  std::size_t num_chains() const { return n_datasets * n_inits * n_restarts; }
  std::string label() const { return method.empty() ? to_string(sampler) : method; }
  /// Throws ValidationError on inconsistent settings.
  void validate() const;
};

Json experiment_config_to_json(const ExperimentConfig& config);
/// Relative dataset paths resolve against `base_dir`.
ExperimentConfig experiment_config_from_json(const Json& j,
                                             const std::filesystem::path& base_dir = {});

struct MetricPoint {
  std::size_t iteration = 0;
  double wall_clock_s = 0.0;
  double log_joint = 0.0;
  double rel_log_density = 0.0;
  std::string metric_name;
  double metric_value = 0.0;
};

struct Trace {
  std::size_t chain_id = 0;
  std::vector<MetricPoint> records;
  std::shared_ptr<const ChainState> final_state;
  std::optional<std::string> error;
};

/// A dataset shared read-only by the chains that use it.
struct PreparedDataset {
  std::shared_ptr<const Dataset> data;
  std::vector<HeldOutEntry> heldout;
  std::optional<SimResult> truth;
  /// Observed data with the held-out entries filled back in.
  std::shared_ptr<const Dataset> complete;
};

PreparedDataset prepare_dataset(const ExperimentConfig& config, std::size_t dataset_index);

struct ChainSeeds {
  std::size_t dataset = 0;
  std::uint64_t init_seed = 0;
  std::uint64_t chain_seed = 0;
};

ChainSeeds chain_seeds(const ExperimentConfig& config, std::size_t chain_id);

/// Initial state of a chain; Z and θ from the prior or the generating values.
ChainState initial_state(const ExperimentConfig& config, const PreparedDataset& dataset,
                         std::uint64_t init_seed);

/// The model metric for a state: held-out RMSE (linear Gaussian),
/// reconstruction error over all entries (relational) or B-Cubed F against the
/// generating allocation (PyClone). Name "none" and NaN when unavailable.
std::pair<std::string, double> model_metric(const ChainState& state,
                                            const PreparedDataset& dataset);

/// Runs one chain. Time spent computing records is excluded from the clock.
/// A failure mid-run leaves the records so far in `out` and rethrows.
void run_chain(const ExperimentConfig& config, const PreparedDataset& dataset,
               std::size_t chain_id, Trace& out);
Trace run_chain(const ExperimentConfig& config, std::size_t chain_id);

/// Worker count from FEATALLOC_WORKERS, else the hardware concurrency.
std::size_t default_workers();

/// Runs every chain of the grid; a failing chain keeps its partial records and
/// carries the error message. Traces are ordered by chain id.
std::vector<Trace> run_experiment(const ExperimentConfig& config, std::size_t workers = 0);

void write_traces_csv(std::ostream& out, const std::vector<Trace>& traces);
void write_traces_csv(const std::filesystem::path& path, const std::vector<Trace>& traces);
std::vector<Trace> read_traces_csv(std::istream& in);
std::vector<Trace> read_traces_csv(const std::filesystem::path& path);

/// Writes traces.csv and run.json (configuration, seeds, errors, final sizes).
void write_run(const std::filesystem::path& dir, const ExperimentConfig& config,
               const std::vector<Trace>& traces);

struct MethodTraces {
  std::string method;
  std::vector<Trace> traces;
};

/// Reads a directory written by write_run.
MethodTraces read_run(const std::filesystem::path& dir);

enum class CompareMetric { RelLogDensity, ModelMetric };

struct CompareOptions {
  std::vector<double> checkpoints;
  CompareMetric metric = CompareMetric::RelLogDensity;
  double alpha = 0.001;
};

/// Last value recorded at or before `t`; empty if `t` lies past the trace end
/// or before its first record.
std::optional<double> value_at(const Trace& trace, double t, CompareMetric metric);

/// Whether smaller values of a metric are better.
bool lower_is_better(const std::string& metric_name);

/// Per-checkpoint Friedman test over chains present in every method, Nemenyi
/// pairs when the Friedman p-value is below `alpha`, mean ranks (1 = best)
/// and per-method quantiles. Relative log densities are ranked so that a
/// higher log density is better whatever the sign of the reference.
Json compare_methods(const std::vector<MethodTraces>& methods, const CompareOptions& options);

struct TuneResult {
  std::vector<ExperimentConfig> configs;
  std::vector<std::vector<Trace>> traces;
};

/// Sets one SamplerConfig field by name ("n_particles", "resample_threshold",
/// "anneal_power", "dpf_max_particles", "test_path") from its text form.
void set_sampler_field(SamplerConfig& config, const std::string& field, const std::string& value);

/// One experiment per value of `field`, labelled "field=value".
TuneResult tune(const ExperimentConfig& base, const std::string& field,
                const std::vector<std::string>& values, std::size_t workers = 0);

}  // namespace featalloc
