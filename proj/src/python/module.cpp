#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>

#include "featalloc/errors.hpp"
#include "featalloc/harness.hpp"
#include "featalloc/io.hpp"
#include "featalloc/metrics.hpp"
#include "featalloc/prior.hpp"
#include "featalloc/synth.hpp"

namespace py = pybind11;
using namespace featalloc;

namespace {

using Rows = std::vector<std::vector<int>>;

Rows to_rows(const FeatureMatrix& z) {
  Rows out(z.rows(), std::vector<int>(z.cols()));
  for (std::size_t n = 0; n < z.rows(); ++n) {
    for (std::size_t k = 0; k < z.cols(); ++k) out[n][k] = z(n, k);
  }
  return out;
}

py::dict trace_to_dict(const Trace& t) {
  py::list records;
  for (const auto& r : t.records) {
    py::dict d;
    d["iteration"] = r.iteration;
    d["wall_clock_s"] = r.wall_clock_s;
    d["log_joint"] = r.log_joint;
    d["rel_log_density"] = r.rel_log_density;
    d["model_metric_name"] = r.metric_name;
    d["model_metric_value"] = r.metric_value;
    records.append(d);
  }
  py::dict out;
  out["chain_id"] = t.chain_id;
  out["records"] = records;
  out["error"] = t.error ? py::object(py::str(*t.error)) : py::object(py::none());
  if (t.final_state) out["final_z"] = to_rows(t.final_state->z);
  return out;
}

Trace trace_from_dict(const py::dict& d) {
  Trace t;
  t.chain_id = d["chain_id"].cast<std::size_t>();
  for (const auto& item : d["records"]) {
    const auto r = item.cast<py::dict>();
    t.records.push_back({r["iteration"].cast<std::size_t>(), r["wall_clock_s"].cast<double>(),
                         r["log_joint"].cast<double>(), r["rel_log_density"].cast<double>(),
                         r["model_metric_name"].cast<std::string>(),
                         r["model_metric_value"].cast<double>()});
  }
  return t;
}

CompareMetric compare_metric_from_string(const std::string& name) {
  if (name == "rel_log_density") return CompareMetric::RelLogDensity;
  if (name == "model") return CompareMetric::ModelMetric;
  throw ValidationError("unknown compare metric: " + name);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Feature allocation samplers and benchmark harness";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);

  m.def("simulate", [](const std::string& spec) {
    const auto sim = simulate(sim_spec_from_json(Json::parse(spec)));
    return dataset_to_json(to_document(sim)).dump();
  }, py::arg("spec_json"), "Simulates a dataset; returns the dataset document as JSON text.");

  m.def("default_sim_spec", [] { return sim_spec_to_json(SimSpec{}).dump(); });

  m.def("run_experiment", [](const std::string& config, std::size_t workers) {
    const auto cfg = experiment_config_from_json(Json::parse(config));
    std::vector<Trace> traces;
    {
      py::gil_scoped_release release;
      traces = run_experiment(cfg, workers);
    }
    py::list out;
    for (const auto& t : traces) out.append(trace_to_dict(t));
    return out;
  }, py::arg("config_json"), py::arg("workers") = 1);

  m.def("compare", [](const std::map<std::string, py::list>& methods,
                      const std::vector<double>& checkpoints, const std::string& metric,
                      double alpha) {
    std::vector<MethodTraces> in;
    for (const auto& [name, traces] : methods) {
      MethodTraces mt{name, {}};
      for (const auto& t : traces) mt.traces.push_back(trace_from_dict(t.cast<py::dict>()));
      in.push_back(std::move(mt));
    }
    return compare_methods(in, {checkpoints, compare_metric_from_string(metric), alpha}).dump();
  }, py::arg("methods"), py::arg("checkpoints"), py::arg("metric") = "rel_log_density",
     py::arg("alpha") = 0.001);

  m.def("friedman_test", [](const ScoreTable& table) {
    const auto r = friedman_test(table);
    return std::make_pair(r.statistic, r.p_value);
  }, py::arg("scores"), "Scores indexed [method][block]; returns (statistic, p).");
  m.def("nemenyi_posthoc", &nemenyi_posthoc, py::arg("scores"));
  m.def("mean_ranks", &mean_ranks, py::arg("scores"));

  m.def("bcubed", [](const Rows& inferred, const Rows& truth) {
    const auto r = bcubed_fmeasure(FeatureMatrix::from_rows(inferred), FeatureMatrix::from_rows(truth));
    return py::make_tuple(r.precision, r.recall, r.f);
  }, py::arg("inferred"), py::arg("truth"), "Returns (precision, recall, F).");

  m.def("relative_log_density", &relative_log_density, py::arg("log_density"),
        py::arg("reference"));

  m.def("fbb_log_pmf", [](const Rows& z, double a, double b) {
    const auto fz = FeatureMatrix::from_rows(z);
    return fbb_log_pmf(fz, {fz.cols(), a, b});
  }, py::arg("z"), py::arg("a") = 1.0, py::arg("b") = 1.0);
  m.def("ibp_log_pmf", [](const Rows& z, double alpha) {
    return ibp_log_pmf(FeatureMatrix::from_rows(z), {alpha});
  }, py::arg("z"), py::arg("alpha"));
  m.def("left_order_form", [](const Rows& z) {
    return to_rows(left_order_form(FeatureMatrix::from_rows(z)));
  }, py::arg("z"));
}
