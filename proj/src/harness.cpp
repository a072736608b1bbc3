#include "featalloc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "featalloc/errors.hpp"
#include "featalloc/metrics.hpp"

namespace featalloc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr const char* kCsvHeader =
    "chain_id,iteration,wall_clock_s,log_joint,rel_log_density,model_metric_name,"
    "model_metric_value";

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<T>() : fallback;
}

template <typename F>
auto as_validation_error(const std::string& what, F&& fn) {
  try {
    return fn();
  } catch (const ContractViolation& e) {
    throw ValidationError(what + ": " + e.what());
  } catch (const Json::exception& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

PriorSpec fit_prior(const ExperimentConfig& config, const PreparedDataset& dataset) {
  if (config.prior) return *config.prior;
  if (dataset.truth) return dataset.truth->prior;
  throw ValidationError("experiment: no prior given and the dataset has no generating prior");
}

}  // namespace

std::string to_string(InitMode mode) { return mode == InitMode::Random ? "random" : "truth"; }

InitMode init_mode_from_string(const std::string& name) {
  if (name == "random") return InitMode::Random;
  if (name == "truth") return InitMode::Truth;
  throw ValidationError("unknown init mode '" + name + "'");
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ValidationError("experiment: " + msg); };
  if (sim.has_value() == dataset_path.has_value()) fail("give exactly one of sim and dataset_path");
  if (dataset_path && n_datasets != 1) fail("a dataset file allows only n_datasets = 1");
  if (n_datasets == 0 || n_inits == 0 || n_restarts == 0) fail("grid sizes must be positive");
  if (!(time_budget_s > 0.0) || !std::isfinite(time_budget_s)) fail("time_budget_s must be positive");
  if (!(record_interval_s > 0.0) || !std::isfinite(record_interval_s)) {
    fail("record_interval_s must be positive");
  }
  if (record_every == 0) fail("record_every must be positive");
  as_validation_error("experiment", [&] {
    sampler_config.validate();
    if (prior) featalloc::validate(*prior);
    return 0;
  });
  if (sim) sim->validate();
  const bool ibp_fit = prior ? is_ibp(*prior) : (sim && is_ibp(sim->prior));
  if (sim && sim->model == ModelKind::PyClone && ibp_fit) {
    fail("the PyClone model is only defined under the FBB prior");
  }
  if (singletons == SingletonUpdate::CollapsedLinearGaussian && sim &&
      sim->model != ModelKind::LinearGaussian) {
    fail("collapsed singleton updates need the linear Gaussian model");
  }
  if (init_params == InitMode::Truth && init_z == InitMode::Random && ibp_fit) {
    fail("generating parameters under the IBP need the generating Z");
  }
}

Json experiment_config_to_json(const ExperimentConfig& c) {
  Json j = {{"method", c.label()},
            {"sampler", to_string(c.sampler)},
            {"sampler_config",
             {{"n_particles", c.sampler_config.n_particles},
              {"resample_threshold", c.sampler_config.resample_threshold},
              {"anneal_power", c.sampler_config.anneal_power},
              {"dpf_max_particles", c.sampler_config.dpf_max_particles},
              {"test_path", to_string(c.sampler_config.test_path)},
              {"max_enumeration_features", c.sampler_config.max_enumeration_features}}},
            {"singletons", to_string(c.singletons)},
            {"n_datasets", c.n_datasets},
            {"n_inits", c.n_inits},
            {"n_restarts", c.n_restarts},
            {"time_budget_s", c.time_budget_s},
            {"record_interval_s", c.record_interval_s},
            {"record_every", c.record_every},
            {"init_z", to_string(c.init_z)},
            {"init_params", to_string(c.init_params)},
            {"fixed_params", c.fixed_params},
            {"update_alpha", c.update_alpha},
            {"seed", c.seed}};
  if (c.sim) j["sim"] = sim_spec_to_json(*c.sim);
  if (c.dataset_path) j["dataset_path"] = c.dataset_path->string();
  if (c.prior) j["prior"] = prior_to_json(*c.prior);
  if (c.max_iterations) j["max_iterations"] = *c.max_iterations;
  if (c.burnin_sweeps) j["burnin_sweeps"] = *c.burnin_sweeps;
  return j;
}

ExperimentConfig experiment_config_from_json(const Json& j, const std::filesystem::path& base_dir) {
  reject_unknown_keys(j,
                      {"method", "sim", "dataset_path", "prior", "sampler", "sampler_config",
                       "singletons", "n_datasets", "n_inits", "n_restarts", "time_budget_s",
                       "record_interval_s", "max_iterations", "record_every", "burnin_sweeps",
                       "init_z", "init_params", "fixed_params", "update_alpha", "seed"},
                      "experiment");
  ExperimentConfig c;
  as_validation_error("experiment", [&] {
    c.method = get_or<std::string>(j, "method", "");
    if (j.contains("sim")) c.sim = sim_spec_from_json(j.at("sim"));
    if (j.contains("dataset_path")) {
      std::filesystem::path p = j.at("dataset_path").get<std::string>();
      c.dataset_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    if (j.contains("prior")) c.prior = prior_from_json(j.at("prior"));
    if (j.contains("sampler")) c.sampler = sampler_kind_from_string(j.at("sampler").get<std::string>());
    if (j.contains("sampler_config")) {
      const auto& s = j.at("sampler_config");
      reject_unknown_keys(s,
                          {"n_particles", "resample_threshold", "anneal_power",
                           "dpf_max_particles", "test_path", "max_enumeration_features"},
                          "sampler_config");
      auto& sc = c.sampler_config;
      sc.n_particles = get_or(s, "n_particles", sc.n_particles);
      sc.resample_threshold = get_or(s, "resample_threshold", sc.resample_threshold);
      sc.anneal_power = get_or(s, "anneal_power", sc.anneal_power);
      sc.dpf_max_particles = get_or(s, "dpf_max_particles", sc.dpf_max_particles);
      if (s.contains("test_path")) sc.test_path = test_path_from_string(s.at("test_path").get<std::string>());
      sc.max_enumeration_features = get_or(s, "max_enumeration_features", sc.max_enumeration_features);
    }
    if (j.contains("singletons")) {
      c.singletons = singleton_update_from_string(j.at("singletons").get<std::string>());
    }
    c.n_datasets = get_or(j, "n_datasets", c.n_datasets);
    c.n_inits = get_or(j, "n_inits", c.n_inits);
    c.n_restarts = get_or(j, "n_restarts", c.n_restarts);
    c.time_budget_s = get_or(j, "time_budget_s", c.time_budget_s);
    c.record_interval_s = get_or(j, "record_interval_s", c.record_interval_s);
    if (j.contains("max_iterations") && !j.at("max_iterations").is_null()) {
      c.max_iterations = j.at("max_iterations").get<std::size_t>();
    }
    c.record_every = get_or(j, "record_every", c.record_every);
    if (j.contains("burnin_sweeps") && !j.at("burnin_sweeps").is_null()) {
      c.burnin_sweeps = j.at("burnin_sweeps").get<std::size_t>();
    }
    if (j.contains("init_z")) c.init_z = init_mode_from_string(j.at("init_z").get<std::string>());
    if (j.contains("init_params")) {
      c.init_params = init_mode_from_string(j.at("init_params").get<std::string>());
    }
    c.fixed_params = get_or(j, "fixed_params", c.fixed_params);
    c.update_alpha = get_or(j, "update_alpha", c.update_alpha);
    c.seed = get_or(j, "seed", c.seed);
    return 0;
  });
  c.validate();
  return c;
}

PreparedDataset prepare_dataset(const ExperimentConfig& config, std::size_t dataset_index) {
  PreparedDataset out;
  if (config.sim) {
    SimSpec spec = *config.sim;
    spec.seed += dataset_index;
    SimResult sim = simulate(spec);
    out.data = std::make_shared<const Dataset>(sim.data);
    out.heldout = sim.heldout;
    out.truth = std::move(sim);
  } else {
    auto doc = dataset_from_json(read_json(*config.dataset_path));
    out.data = std::make_shared<const Dataset>(doc.data);
    out.heldout = std::move(doc.heldout);
    out.truth = std::move(doc.truth);
  }
  out.complete = out.heldout.empty()
                     ? out.data
                     : std::make_shared<const Dataset>(restore_heldout(*out.data, out.heldout));
  return out;
}

ChainSeeds chain_seeds(const ExperimentConfig& config, std::size_t chain_id) {
  require(chain_id < config.num_chains(), "chain_seeds: chain index out of range");
  const std::size_t per_dataset = config.n_inits * config.n_restarts;
  ChainSeeds s;
  s.dataset = chain_id / per_dataset;
  const std::size_t init = (chain_id % per_dataset) / config.n_restarts;
  s.init_seed = mix_seed(mix_seed(config.seed, 0x696e6974ULL), s.dataset * config.n_inits + init);
  s.chain_seed = mix_seed(config.seed, chain_id);
  return s;
}

ChainState initial_state(const ExperimentConfig& config, const PreparedDataset& dataset,
                         std::uint64_t init_seed) {
  Rng rng(init_seed);
  const PriorSpec prior = fit_prior(config, dataset);
  const std::size_t rows = dataset_rows(*dataset.data);
  const bool need_truth = config.init_z == InitMode::Truth || config.init_params == InitMode::Truth;
  if (need_truth && !dataset.truth) {
    throw ValidationError("experiment: truth initialisation needs generating values");
  }
  const auto* fbb = std::get_if<FbbPrior>(&prior);

  FeatureMatrix z;
  if (config.init_z == InitMode::Truth) {
    z = dataset.truth->z;
    if (fbb && z.cols() != fbb->num_features) {
      throw ValidationError("experiment: generating Z width differs from the FBB feature count");
    }
  } else if (fbb) {
    z = FeatureMatrix(rows, fbb->num_features);
    for (std::size_t n = 0; n < rows; ++n) {
      for (std::size_t k = 0; k < fbb->num_features; ++k) z.set(n, k, rng.bernoulli(0.5));
    }
  } else {
    z = draw_feature_matrix(prior, rows, rng);
  }

  ModelParams params;
  const ModelKind kind = std::visit(
      [](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, RealData>) return ModelKind::LinearGaussian;
        else if constexpr (std::is_same_v<T, RelationData>) return ModelKind::Lfrm;
        else return ModelKind::PyClone;
      },
      *dataset.data);
  if (kind == ModelKind::PyClone && is_ibp(prior)) {
    throw ValidationError("experiment: the PyClone model is only defined under the FBB prior");
  }
  const std::optional<ModelParams> truth_params =
      dataset.truth ? std::optional<ModelParams>(dataset.truth->params) : std::nullopt;
  if (config.init_params == InitMode::Truth) {
    params = *truth_params;
    if (num_features(params) != z.cols()) {
      throw ValidationError("experiment: generating parameters and initial Z differ in width");
    }
  } else {
    const std::size_t k = z.cols();
    switch (kind) {
      case ModelKind::LinearGaussian: {
        const auto dims = std::get<RealData>(*dataset.data).cols;
        const LinearGaussianHyper hyper =
            truth_params ? std::get<LinearGaussianParams>(*truth_params).hyper : LinearGaussianHyper{};
        const double tau_v = rng.gamma(hyper.a_v, hyper.b_v);
        const double tau_x = rng.gamma(hyper.a_x, hyper.b_x);
        params = LinearGaussianModel::draw_params(k, dims, tau_v, tau_x, rng, hyper);
        break;
      }
      case ModelKind::Lfrm: {
        LfrmParams base = truth_params ? std::get<LfrmParams>(*truth_params) : LfrmParams{};
        auto p = LfrmModel::draw_params(k, rng.gamma(base.a, base.b), base.symmetric, rng);
        p.a = base.a;
        p.b = base.b;
        p.step = base.step;
        params = p;
        break;
      }
      case ModelKind::PyClone: {
        PyCloneParams base = truth_params ? std::get<PyCloneParams>(*truth_params) : PyCloneParams{};
        auto p = PyCloneModel::draw_params(k, std::get<CountData>(*dataset.data).cols(), base.a_v,
                                           base.b_v, rng);
        p.error_rate = base.error_rate;
        p.het_vaf = base.het_vaf;
        p.step = base.step;
        params = p;
        break;
      }
    }
  }
  return ChainState(std::move(z), make_model(dataset.data, params), prior);
}

std::pair<std::string, double> model_metric(const ChainState& state, const PreparedDataset& dataset) {
  switch (state.model->kind()) {
    case ModelKind::LinearGaussian: {
      if (dataset.heldout.empty()) return {"none", kNaN};
      const auto params = std::get<LinearGaussianParams>(model_params(*state.model));
      return {"rmse", rmse_heldout(params, state.z, dataset.heldout)};
    }
    case ModelKind::Lfrm: {
      const auto params = std::get<LfrmParams>(model_params(*state.model));
      return {"reconstruction_error",
              lfrm_reconstruction_error(params, state.z, std::get<RelationData>(*dataset.complete))};
    }
    case ModelKind::PyClone:
      if (!dataset.truth) return {"none", kNaN};
      return {"bcubed_f", bcubed_fmeasure(state.z, dataset.truth->z).f};
  }
  return {"none", kNaN};
}

void run_chain(const ExperimentConfig& config, const PreparedDataset& dataset, std::size_t chain_id,
               Trace& out) {
  using Clock = std::chrono::steady_clock;
  out.chain_id = chain_id;
  out.records.clear();
  const ChainSeeds seeds = chain_seeds(config, chain_id);
  ChainState state = initial_state(config, dataset, seeds.init_seed);
  Rng rng(seeds.chain_seed);

  SweepOptions options;
  options.sampler = config.sampler;
  options.config = config.sampler_config;
  options.update_parameters = !config.fixed_params;
  options.update_alpha = config.update_alpha;
  options.singletons = config.singletons;

  std::size_t iteration = 0;
  double elapsed = 0.0;
  auto record = [&] {
    MetricPoint p;
    p.iteration = iteration;
    p.wall_clock_s = elapsed;
    p.log_joint = state.log_joint();
    p.rel_log_density =
        dataset.truth ? relative_log_density(p.log_joint, dataset.truth->log_density) : kNaN;
    std::tie(p.metric_name, p.metric_value) = model_metric(state, dataset);
    out.records.push_back(std::move(p));
  };
  auto step = [&] {
    if (config.burnin_sweeps && iteration == *config.burnin_sweeps &&
        is_burnin_only(options.config.test_path)) {
      options.config.test_path = TestPathStrategy::Zeros;
    }
    const auto start = Clock::now();
    sweep(state, options, rng);
    elapsed += std::chrono::duration<double>(Clock::now() - start).count();
    ++iteration;
  };

  try {
    record();
    if (config.max_iterations) {
      while (iteration < *config.max_iterations) {
        step();
        if (iteration % config.record_every == 0 || iteration == *config.max_iterations) record();
      }
    } else {
      // Grid points are k * interval; the slack absorbs rounding in that product.
      const double slack = 1e-9 * config.record_interval_s;
      std::size_t k = 1;
      auto next = [&] { return static_cast<double>(k) * config.record_interval_s - slack; };
      while (elapsed < config.time_budget_s) {
        step();
        if (elapsed >= next() && next() <= config.time_budget_s) {
          record();
          while (next() <= elapsed) ++k;
        }
      }
    }
  } catch (...) {
    out.final_state = std::make_shared<const ChainState>(std::move(state));
    throw;
  }
  out.final_state = std::make_shared<const ChainState>(std::move(state));
}

Trace run_chain(const ExperimentConfig& config, std::size_t chain_id) {
  config.validate();
  const auto dataset = prepare_dataset(config, chain_seeds(config, chain_id).dataset);
  Trace out;
  run_chain(config, dataset, chain_id, out);
  return out;
}

std::size_t default_workers() {
  if (const char* env = std::getenv("FEATALLOC_WORKERS")) {
    std::size_t value = 0;
    const std::string text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || value == 0) {
      throw ValidationError("FEATALLOC_WORKERS must be a positive integer");
    }
    return value;
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

std::vector<Trace> run_experiment(const ExperimentConfig& config, std::size_t workers) {
  config.validate();
  if (workers == 0) workers = default_workers();
  std::vector<std::optional<PreparedDataset>> datasets(config.n_datasets);
  std::vector<std::string> dataset_errors(config.n_datasets);
  for (std::size_t d = 0; d < config.n_datasets; ++d) {
    try {
      datasets[d] = prepare_dataset(config, d);
    } catch (const std::exception& e) {
      dataset_errors[d] = e.what();
    }
  }
  const std::size_t chains = config.num_chains();
  std::vector<Trace> traces(chains);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < chains; c = next++) {
      traces[c].chain_id = c;
      const std::size_t d = chain_seeds(config, c).dataset;
      if (!datasets[d]) {
        traces[c].error = dataset_errors[d];
        continue;
      }
      try {
        run_chain(config, *datasets[d], c, traces[c]);
      } catch (const std::exception& e) {
        traces[c].error = e.what();
      }
    }
  };
  workers = std::min(workers, chains);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return traces;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& text, std::size_t line) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (text.empty() || end != begin + text.size()) {
    throw ValidationError("trace CSV line " + std::to_string(line) + ": bad number '" + text + "'");
  }
  return v;
}

std::size_t parse_count(const std::string& text, std::size_t line) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("trace CSV line " + std::to_string(line) + ": bad integer '" + text + "'");
  }
  return v;
}

}  // namespace

void write_traces_csv(std::ostream& out, const std::vector<Trace>& traces) {
  out << kCsvHeader << '\n';
  for (const auto& t : traces) {
    for (const auto& r : t.records) {
      require(r.metric_name.find_first_of(",\n\"") == std::string::npos,
              "write_traces_csv: metric name needs quoting");
      out << t.chain_id << ',' << r.iteration << ',' << format_double(r.wall_clock_s) << ','
          << format_double(r.log_joint) << ',' << format_double(r.rel_log_density) << ','
          << r.metric_name << ',' << format_double(r.metric_value) << '\n';
    }
  }
}

void write_traces_csv(const std::filesystem::path& path, const std::vector<Trace>& traces) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
  write_traces_csv(out, traces);
  if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

std::vector<Trace> read_traces_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ValidationError("trace CSV: unexpected header");
  }
  std::map<std::size_t, Trace> by_chain;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 7) {
      throw ValidationError("trace CSV line " + std::to_string(line_no) + ": expected 7 fields");
    }
    const std::size_t chain = parse_count(fields[0], line_no);
    MetricPoint p;
    p.iteration = parse_count(fields[1], line_no);
    p.wall_clock_s = parse_double(fields[2], line_no);
    p.log_joint = parse_double(fields[3], line_no);
    p.rel_log_density = parse_double(fields[4], line_no);
    p.metric_name = fields[5];
    p.metric_value = parse_double(fields[6], line_no);
    auto& trace = by_chain[chain];
    trace.chain_id = chain;
    if (!trace.records.empty() && p.wall_clock_s < trace.records.back().wall_clock_s) {
      throw ValidationError("trace CSV line " + std::to_string(line_no) +
                            ": wall clock decreases within a chain");
    }
    trace.records.push_back(std::move(p));
  }
  std::vector<Trace> out;
  for (auto& [id, trace] : by_chain) out.push_back(std::move(trace));
  return out;
}

std::vector<Trace> read_traces_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  return read_traces_csv(in);
}

void write_run(const std::filesystem::path& dir, const ExperimentConfig& config,
               const std::vector<Trace>& traces) {
  std::filesystem::create_directories(dir);
  write_traces_csv(dir / "traces.csv", traces);
  Json chains = Json::array();
  for (const auto& t : traces) {
    const auto seeds = chain_seeds(config, t.chain_id);
    Json c = {{"chain_id", t.chain_id},
              {"dataset", seeds.dataset},
              {"init_seed", seeds.init_seed},
              {"chain_seed", seeds.chain_seed},
              {"records", t.records.size()},
              {"error", t.error ? Json(*t.error) : Json(nullptr)}};
    if (t.final_state) {
      c["final_features"] = t.final_state->z.cols();
      c["final_iteration"] = t.records.empty() ? 0 : t.records.back().iteration;
    }
    chains.push_back(std::move(c));
  }
  write_json(dir / "run.json", {{"method", config.label()},
                                {"config", experiment_config_to_json(config)},
                                {"chains", std::move(chains)}});
}

MethodTraces read_run(const std::filesystem::path& dir) {
  const Json run = read_json(dir / "run.json");
  MethodTraces out;
  out.method = as_validation_error("run.json", [&] { return run.at("method").get<std::string>(); });
  out.traces = read_traces_csv(dir / "traces.csv");
  if (run.contains("chains")) {
    for (const auto& c : run.at("chains")) {
      if (!c.contains("error") || c.at("error").is_null()) continue;
      const auto id = c.at("chain_id").get<std::size_t>();
      auto it = std::find_if(out.traces.begin(), out.traces.end(),
                             [&](const Trace& t) { return t.chain_id == id; });
      if (it == out.traces.end()) {
        Trace t;
        t.chain_id = id;
        it = out.traces.insert(
            std::upper_bound(out.traces.begin(), out.traces.end(), t,
                             [](const Trace& a, const Trace& b) { return a.chain_id < b.chain_id; }),
            std::move(t));
      }
      it->error = c.at("error").get<std::string>();
    }
  }
  return out;
}

namespace {

const MetricPoint* record_at(const Trace& trace, double t) {
  if (trace.records.empty() || t > trace.records.back().wall_clock_s) return nullptr;
  const MetricPoint* last = nullptr;
  for (const auto& r : trace.records) {
    if (r.wall_clock_s > t) break;
    last = &r;
  }
  return last;
}

}  // namespace

std::optional<double> value_at(const Trace& trace, double t, CompareMetric metric) {
  const MetricPoint* last = record_at(trace, t);
  if (last == nullptr) return std::nullopt;
  const double v = metric == CompareMetric::RelLogDensity ? last->rel_log_density : last->metric_value;
  if (std::isnan(v)) return std::nullopt;
  return v;
}

bool lower_is_better(const std::string& metric_name) { return metric_name != "bcubed_f"; }

namespace {

/// Linear interpolation between order statistics (the common "type 7" rule).
double quantile(std::vector<double> sorted, double q) {
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

Json compare_methods(const std::vector<MethodTraces>& methods, const CompareOptions& options) {
  require(methods.size() >= 2, "compare_methods: need at least two methods");
  require(!options.checkpoints.empty(), "compare_methods: no checkpoints");
  std::set<std::string> names;
  for (const auto& m : methods) {
    require(names.insert(m.method).second, "compare_methods: duplicate method '" + m.method + "'");
  }

  std::string metric_name = "rel_log_density";
  if (options.metric == CompareMetric::ModelMetric) {
    metric_name.clear();
    for (const auto& m : methods) {
      for (const auto& t : m.traces) {
        for (const auto& r : t.records) {
          if (r.metric_name == "none") continue;
          require(metric_name.empty() || metric_name == r.metric_name,
                  "compare_methods: traces disagree on the model metric");
          metric_name = r.metric_name;
        }
      }
    }
    if (metric_name.empty()) metric_name = "none";
  }
  const bool lower_better = lower_is_better(metric_name);

  Json report = {{"metric", metric_name},
                 {"lower_is_better", lower_better},
                 {"alpha", options.alpha},
                 {"methods", Json::array()},
                 {"checkpoints", Json::array()}};
  for (const auto& m : methods) report["methods"].push_back(m.method);

  for (double t : options.checkpoints) {
    std::vector<std::map<std::size_t, double>> values(methods.size());
    // Ranking scores, smaller is better. Relative log density is smaller-better
    // only when the reference log density is negative; the reference is
    // log_joint / (1 + rel) and is shared by every method on a dataset.
    std::vector<std::map<std::size_t, double>> scores(methods.size());
    for (std::size_t i = 0; i < methods.size(); ++i) {
      for (const auto& trace : methods[i].traces) {
        const auto v = value_at(trace, t, options.metric);
        if (!v) continue;
        values[i][trace.chain_id] = *v;
        double score = lower_better ? *v : -*v;
        if (options.metric == CompareMetric::RelLogDensity) {
          const MetricPoint* r = record_at(trace, t);
          if (r->log_joint / (1.0 + r->rel_log_density) > 0.0) score = -score;
        }
        scores[i][trace.chain_id] = score;
      }
    }
    Json cp = {{"time_s", t}};
    Json quantiles = Json::object();
    for (std::size_t i = 0; i < methods.size(); ++i) {
      Json q = {{"n", values[i].size()}};
      if (!values[i].empty()) {
        std::vector<double> v;
        for (const auto& [id, x] : values[i]) v.push_back(x);
        q["q05"] = quantile(v, 0.05);
        q["q25"] = quantile(v, 0.25);
        q["q50"] = quantile(v, 0.50);
        q["q75"] = quantile(v, 0.75);
        q["q95"] = quantile(v, 0.95);
      }
      quantiles[methods[i].method] = std::move(q);
    }
    cp["quantiles"] = std::move(quantiles);

    std::vector<std::size_t> blocks;
    for (const auto& [id, x] : values.front()) {
      bool everywhere = true;
      for (const auto& v : values) everywhere = everywhere && v.contains(id);
      if (everywhere) blocks.push_back(id);
    }
    cp["blocks"] = blocks.size();
    if (blocks.size() < 2) {
      cp["status"] = "absent";
      cp["friedman"] = nullptr;
      cp["mean_ranks"] = nullptr;
      cp["nemenyi"] = Json::array();
      report["checkpoints"].push_back(std::move(cp));
      continue;
    }
    ScoreTable table(methods.size());
    for (std::size_t i = 0; i < methods.size(); ++i) {
      for (std::size_t id : blocks) table[i].push_back(scores[i][id]);
    }
    const auto f = friedman_test(table);
    const auto ranks = mean_ranks(table);
    cp["status"] = "ok";
    cp["friedman"] = {{"statistic", f.statistic}, {"p", f.p_value}};
    Json rank_json = Json::object();
    for (std::size_t i = 0; i < methods.size(); ++i) rank_json[methods[i].method] = ranks[i];
    cp["mean_ranks"] = std::move(rank_json);
    Json pairs = Json::array();
    if (f.p_value < options.alpha) {
      const auto p = nemenyi_posthoc(table);
      for (std::size_t i = 0; i < methods.size(); ++i) {
        for (std::size_t j = i + 1; j < methods.size(); ++j) {
          pairs.push_back(
              {{"method_i", methods[i].method}, {"method_j", methods[j].method}, {"p", p[i][j]}});
        }
      }
    }
    cp["nemenyi"] = std::move(pairs);
    report["checkpoints"].push_back(std::move(cp));
  }
  return report;
}

void set_sampler_field(SamplerConfig& config, const std::string& field, const std::string& value) {
  auto count = [&] {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
      throw ValidationError("tune: '" + value + "' is not a count");
    }
    return v;
  };
  auto real = [&] {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size()) {
      throw ValidationError("tune: '" + value + "' is not a number");
    }
    return v;
  };
  if (field == "n_particles") {
    config.n_particles = count();
  } else if (field == "dpf_max_particles") {
    config.dpf_max_particles = count();
  } else if (field == "resample_threshold") {
    config.resample_threshold = real();
  } else if (field == "anneal_power") {
    config.anneal_power = real();
  } else if (field == "test_path") {
    config.test_path = test_path_from_string(value);
  } else {
    throw ValidationError("tune: unknown sampler field '" + field + "'");
  }
  as_validation_error("tune", [&] {
    config.validate();
    return 0;
  });
}

TuneResult tune(const ExperimentConfig& base, const std::string& field,
                const std::vector<std::string>& values, std::size_t workers) {
  if (values.empty()) throw ValidationError("tune: no values given");
  TuneResult out;
  for (const auto& v : values) {
    ExperimentConfig c = base;
    set_sampler_field(c.sampler_config, field, v);
    c.method = field + "=" + v;
    c.validate();
    out.configs.push_back(std::move(c));
  }
  for (const auto& c : out.configs) out.traces.push_back(run_experiment(c, workers));
  return out;
}

}  // namespace featalloc
