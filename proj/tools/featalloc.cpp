#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "featalloc/errors.hpp"
#include "featalloc/harness.hpp"
#include "featalloc/io.hpp"

using namespace featalloc;
namespace fs = std::filesystem;

namespace {

constexpr int kUsageError = 2;

struct SimFlags {
  std::string spec_path;
  std::string model = "lg";
  std::string prior = "fbb";
  std::size_t k = 20;
  double a = 1.0;
  double b = 1.0;
  double alpha = 2.0;
  std::size_t n = 100;
  std::size_t d = 10;
  double tau_v = 0.25;
  double tau_x = 25.0;
  double lfrm_tau = 0.25;
  bool symmetric = false;
  double a_v = 1.0;
  double b_v = 1.0;
  double mean_depth = 100.0;
  double missing = 0.0;
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    app->add_option("--spec", spec_path, "Simulation settings as JSON (flags below are ignored)");
    app->add_option("--model", model, "lg | lfrm | pyclone")->capture_default_str();
    app->add_option("--prior", prior, "fbb | ibp")->capture_default_str();
    app->add_option("--k", k, "FBB feature count")->capture_default_str();
    app->add_option("--a", a, "FBB Beta a")->capture_default_str();
    app->add_option("--b", b, "FBB Beta b")->capture_default_str();
    app->add_option("--alpha", alpha, "IBP concentration")->capture_default_str();
    app->add_option("--n", n, "Rows")->capture_default_str();
    app->add_option("--d", d, "Dimensions (LG) or samples (PyClone)")->capture_default_str();
    app->add_option("--tau-v", tau_v, "LG feature precision")->capture_default_str();
    app->add_option("--tau-x", tau_x, "LG noise precision")->capture_default_str();
    app->add_option("--lfrm-tau", lfrm_tau, "Relational weight precision")->capture_default_str();
    app->add_flag("--symmetric", symmetric, "Symmetric relational weights");
    app->add_option("--a-v", a_v, "PyClone Gamma shape")->capture_default_str();
    app->add_option("--b-v", b_v, "PyClone Gamma rate")->capture_default_str();
    app->add_option("--mean-depth", mean_depth, "PyClone mean depth")->capture_default_str();
    app->add_option("--missing", missing, "Fraction of entries held out")->capture_default_str();
    app->add_option("--seed", seed, "Seed")->capture_default_str();
  }

  SimSpec spec() const {
    if (!spec_path.empty()) return sim_spec_from_json(read_json(spec_path));
    SimSpec s;
    s.model = model_kind_from_string(model);
    if (prior == "fbb") {
      s.prior = FbbPrior{k, a, b};
    } else if (prior == "ibp") {
      s.prior = IbpPrior{alpha};
    } else {
      throw ValidationError("unknown prior '" + prior + "'");
    }
    s.rows = n;
    s.dims = d;
    s.tau_v = tau_v;
    s.tau_x = tau_x;
    s.lfrm_tau = lfrm_tau;
    s.symmetric = symmetric;
    s.a_v = a_v;
    s.b_v = b_v;
    s.mean_depth = mean_depth;
    s.missing_fraction = missing;
    s.seed = seed;
    s.validate();
    return s;
  }
};

struct RunFlags {
  std::string config_path;
  std::string dataset;
  std::string sim_path;
  std::string method;
  std::string sampler;
  std::string prior;
  double alpha = 0.0;
  std::size_t particles = 0;
  double threshold = -1.0;
  double anneal = -1.0;
  std::size_t dpf_particles = 0;
  std::string test_path;
  std::string singletons;
  double time_budget = 0.0;
  double record_interval = 0.0;
  std::size_t iterations = 0;
  std::vector<std::size_t> grid;
  std::string init;
  bool fixed_params = false;
  std::uint64_t seed = 0;
  bool seed_set = false;

  void add(CLI::App* app) {
    app->add_option("--config", config_path, "Experiment configuration JSON");
    app->add_option("--dataset", dataset, "Dataset JSON file");
    app->add_option("--sim", sim_path, "Simulation settings JSON");
    app->add_option("--method", method, "Label for the traces");
    app->add_option("--sampler", sampler, "gibbs | row_gibbs | pg | dpf");
    app->add_option("--prior", prior, "Fitting prior: fbb (generating K) | ibp");
    app->add_option("--alpha", alpha, "Initial IBP concentration when fitting with --prior ibp");
    app->add_option("--particles", particles, "PG particles");
    app->add_option("--threshold", threshold, "PG relative ESS resampling threshold");
    app->add_option("--anneal", anneal, "Annealing power");
    app->add_option("--dpf-particles", dpf_particles, "DPF expected particle count");
    app->add_option("--test-path", test_path,
                    "zeros | ones | random | unconditional | conditional | two_stage");
    app->add_option("--singletons", singletons, "IBP singleton move: mh | collapsed");
    app->add_option("--time-budget", time_budget, "Seconds of sampling per chain");
    app->add_option("--record-interval", record_interval, "Seconds between records");
    app->add_option("--iterations", iterations, "Run this many sweeps instead of a time budget");
    app->add_option("--grid", grid, "Datasets, inits and restarts, e.g. 4,4,5")
        ->delimiter(',')
        ->expected(3);
    app->add_option("--init", init, "random | truth (both Z and parameters)");
    app->add_flag("--fixed-params", fixed_params, "Keep the model parameters at their initial values");
    app->add_option("--seed", seed, "Master seed")->each([this](const std::string&) { seed_set = true; });
  }

  ExperimentConfig config() const {
    Json j = config_path.empty() ? Json::object() : read_json(config_path);
    const fs::path base = config_path.empty() ? fs::path{} : fs::path(config_path).parent_path();
    if (!dataset.empty()) {
      j.erase("sim");
      j["dataset_path"] = fs::absolute(dataset).string();
    }
    if (!sim_path.empty()) {
      j.erase("dataset_path");
      j["sim"] = read_json(sim_path);
    }
    if (!j.contains("sim") && !j.contains("dataset_path")) j["sim"] = sim_spec_to_json(SimSpec{});
    if (!method.empty()) j["method"] = method;
    if (!sampler.empty()) j["sampler"] = sampler;
    if (prior == "ibp") {
      j["prior"] = prior_to_json(IbpPrior{alpha > 0.0 ? alpha : 1.0});
    } else if (!prior.empty() && prior != "fbb") {
      throw ValidationError("unknown prior '" + prior + "'");
    }
    auto& sc = j["sampler_config"];
    if (sc.is_null()) sc = Json::object();
    if (particles) sc["n_particles"] = particles;
    if (threshold >= 0.0) sc["resample_threshold"] = threshold;
    if (anneal >= 0.0) sc["anneal_power"] = anneal;
    if (dpf_particles) sc["dpf_max_particles"] = dpf_particles;
    if (!test_path.empty()) sc["test_path"] = test_path;
    if (!singletons.empty()) j["singletons"] = singletons;
    if (time_budget > 0.0) j["time_budget_s"] = time_budget;
    if (record_interval > 0.0) j["record_interval_s"] = record_interval;
    if (iterations) j["max_iterations"] = iterations;
    if (grid.size() == 3) {
      j["n_datasets"] = grid[0];
      j["n_inits"] = grid[1];
      j["n_restarts"] = grid[2];
    }
    if (!init.empty()) {
      j["init_z"] = init;
      j["init_params"] = init;
    }
    if (fixed_params) j["fixed_params"] = true;
    if (seed_set) j["seed"] = seed;
    return experiment_config_from_json(j, base);
  }
};

std::vector<double> parse_checkpoints(const std::vector<double>& given, double fallback) {
  if (!given.empty()) return given;
  return {fallback / 100.0, fallback / 10.0, fallback};
}

void summarise(const std::string& label, const std::vector<Trace>& traces) {
  std::size_t failed = 0;
  for (const auto& t : traces) failed += t.error.has_value();
  std::cerr << label << ": " << traces.size() << " chains";
  if (failed) std::cerr << ", " << failed << " failed";
  std::cerr << '\n';
  for (const auto& t : traces) {
    if (t.error) std::cerr << "  chain " << t.chain_id << ": " << *t.error << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature allocation samplers and benchmark harness"};
  app.require_subcommand(1);

  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate a dataset and write it as JSON");
  SimFlags sim_flags;
  sim_flags.add(simulate_cmd);
  std::string sim_out;
  simulate_cmd->add_option("--out,-o", sim_out, "Output dataset file")->required();

  auto* run_cmd = app.add_subcommand("run", "Run a chain grid and write traces");
  RunFlags run_flags;
  run_flags.add(run_cmd);
  std::string run_out = "featalloc-run";
  run_cmd->add_option("--out,-o", run_out, "Output directory")->capture_default_str();

  auto* compare_cmd = app.add_subcommand("compare", "Compare methods from their run directories");
  std::vector<std::string> compare_dirs;
  std::vector<double> compare_checkpoints;
  std::string compare_metric = "rel_log_density";
  double compare_alpha = 0.001;
  std::string compare_out;
  compare_cmd->add_option("dirs", compare_dirs, "Run directories, one per method")
      ->required()
      ->expected(2, -1);
  compare_cmd->add_option("--checkpoints", compare_checkpoints, "Checkpoint times in seconds")
      ->delimiter(',')
      ->required();
  compare_cmd->add_option("--metric", compare_metric, "rel_log_density | model")
      ->check(CLI::IsMember({"rel_log_density", "model"}))
      ->capture_default_str();
  compare_cmd->add_option("--alpha", compare_alpha, "Significance level")->capture_default_str();
  compare_cmd->add_option("--out,-o", compare_out, "Report file (default: stdout)");

  auto* tune_cmd = app.add_subcommand("tune", "Sweep one sampler setting and compare the values");
  RunFlags tune_flags;
  tune_flags.add(tune_cmd);
  std::string tune_field;
  std::vector<std::string> tune_values;
  std::vector<double> tune_checkpoints;
  std::string tune_out = "featalloc-tune";
  tune_cmd->add_option("--field", tune_field,
                       "n_particles | resample_threshold | anneal_power | dpf_max_particles | "
                       "test_path")
      ->required();
  tune_cmd->add_option("--values", tune_values, "Comma separated values")->delimiter(',')->required();
  tune_cmd->add_option("--checkpoints", tune_checkpoints, "Checkpoint times in seconds")
      ->delimiter(',');
  tune_cmd->add_option("--out,-o", tune_out, "Output directory")->capture_default_str();

  app.footer("Worker threads: FEATALLOC_WORKERS (default: hardware concurrency).");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    if (*simulate_cmd) {
      const auto sim = simulate(sim_flags.spec());
      write_json(sim_out, dataset_to_json(to_document(sim)));
      std::cerr << "wrote " << sim_out << " (" << sim.z.cols() << " features, log density "
                << sim.log_density << ")\n";
    } else if (*run_cmd) {
      const auto config = run_flags.config();
      const auto traces = run_experiment(config);
      write_run(run_out, config, traces);
      summarise(config.label(), traces);
    } else if (*compare_cmd) {
      std::vector<MethodTraces> methods;
      for (const auto& d : compare_dirs) methods.push_back(read_run(d));
      CompareOptions options;
      options.checkpoints = compare_checkpoints;
      options.metric = compare_metric == "model" ? CompareMetric::ModelMetric
                                                 : CompareMetric::RelLogDensity;
      options.alpha = compare_alpha;
      const auto report = compare_methods(methods, options);
      if (compare_out.empty()) {
        std::cout << report.dump(1) << '\n';
      } else {
        write_json(compare_out, report);
      }
    } else if (*tune_cmd) {
      const auto base = tune_flags.config();
      const auto result = tune(base, tune_field, tune_values);
      std::vector<MethodTraces> methods;
      for (std::size_t i = 0; i < result.configs.size(); ++i) {
        const auto& c = result.configs[i];
        write_run(fs::path(tune_out) / c.label(), c, result.traces[i]);
        summarise(c.label(), result.traces[i]);
        methods.push_back({c.label(), result.traces[i]});
      }
      if (methods.size() >= 2) {
        CompareOptions options;
        options.checkpoints = parse_checkpoints(tune_checkpoints, base.time_budget_s);
        write_json(fs::path(tune_out) / "report.json", compare_methods(methods, options));
      }
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
