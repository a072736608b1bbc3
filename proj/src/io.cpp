#include "featalloc/io.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "featalloc/errors.hpp"

namespace featalloc {

namespace {

constexpr const char* kFormat = "featalloc.dataset";
constexpr int kVersion = 1;

template <typename T>
Json rows_to_json(const std::vector<T>& values, std::size_t rows, std::size_t cols) {
  Json out = Json::array();
  for (std::size_t i = 0; i < rows; ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < cols; ++j) row.push_back(values[i * cols + j]);
    out.push_back(std::move(row));
  }
  return out;
}

/// Row-major values of a rows x cols nested array.
std::vector<double> rows_from_json(const Json& j, std::size_t rows, std::size_t cols,
                                   const std::string& what) {
  if (!j.is_array() || j.size() != rows) {
    throw ValidationError(what + ": expected " + std::to_string(rows) + " rows");
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != cols) {
      throw ValidationError(what + ": expected " + std::to_string(cols) + " columns");
    }
    for (const auto& v : row) out.push_back(v.get<double>());
  }
  return out;
}

std::size_t inner_width(const Json& j) {
  return j.is_array() && !j.empty() && j.front().is_array() ? j.front().size() : 0;
}

template <typename T>
Json masked_to_json(const MaskedMatrix<T>& m) {
  Json out = Json::array();
  for (std::size_t i = 0; i < m.rows; ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cols; ++j) {
      if (m.is_observed(i, j)) {
        row.push_back(m.at(i, j));
      } else {
        row.push_back(nullptr);
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

template <typename T>
MaskedMatrix<T> masked_from_json(const Json& j, std::size_t rows, std::size_t cols,
                                 const std::string& what) {
  if (!j.is_array() || j.size() != rows) {
    throw ValidationError(what + ": expected " + std::to_string(rows) + " rows");
  }
  MaskedMatrix<T> m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& row = j[i];
    if (!row.is_array() || row.size() != cols) {
      throw ValidationError(what + ": expected " + std::to_string(cols) + " columns");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (row[c].is_null()) {
        m.observed[i * cols + c] = 0;
      } else {
        m.at(i, c) = row[c].get<T>();
      }
    }
  }
  return m;
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed,
                         const std::string& what) {
  if (!j.is_object()) throw ValidationError(what + ": expected a JSON object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!keys.contains(item.key())) {
      throw ValidationError(what + ": unknown field '" + item.key() + "'");
    }
  }
}

Json prior_to_json(const PriorSpec& prior) {
  if (const auto* fbb = std::get_if<FbbPrior>(&prior)) {
    return {{"type", "fbb"}, {"num_features", fbb->num_features}, {"a", fbb->a}, {"b", fbb->b}};
  }
  return {{"type", "ibp"}, {"alpha", std::get<IbpPrior>(prior).alpha}};
}

PriorSpec prior_from_json(const Json& j) {
  reject_unknown_keys(j, {"type", "num_features", "a", "b", "alpha"}, "prior");
  const auto type = j.at("type").get<std::string>();
  PriorSpec prior;
  if (type == "fbb") {
    prior = FbbPrior{j.at("num_features").get<std::size_t>(), get_or(j, "a", 1.0),
                     get_or(j, "b", 1.0)};
  } else if (type == "ibp") {
    prior = IbpPrior{get_or(j, "alpha", 1.0)};
  } else {
    throw ValidationError("prior: unknown type '" + type + "'");
  }
  try {
    validate(prior);
  } catch (const ContractViolation& e) {
    throw ValidationError(std::string("prior: ") + e.what());
  }
  return prior;
}

Json matrix_to_json(const FeatureMatrix& z) {
  Json out = Json::array();
  for (std::size_t n = 0; n < z.rows(); ++n) {
    Json row = Json::array();
    for (std::size_t k = 0; k < z.cols(); ++k) row.push_back(static_cast<int>(z(n, k)));
    out.push_back(std::move(row));
  }
  return out;
}

FeatureMatrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw ValidationError("feature matrix: expected an array of rows");
  const std::size_t cols = inner_width(j);
  FeatureMatrix z(j.size(), cols);
  for (std::size_t n = 0; n < j.size(); ++n) {
    if (!j[n].is_array() || j[n].size() != cols) {
      throw ValidationError("feature matrix: ragged rows");
    }
    for (std::size_t k = 0; k < cols; ++k) {
      const int v = j[n][k].get<int>();
      if (v != 0 && v != 1) throw ValidationError("feature matrix: entries must be 0 or 1");
      z.set(n, k, static_cast<Bit>(v));
    }
  }
  return z;
}

Json params_to_json(const ModelParams& params) {
  if (const auto* p = std::get_if<LinearGaussianParams>(&params)) {
    return {{"features", rows_to_json(p->features, p->num_features, p->dims)},
            {"tau_v", p->tau_v},
            {"tau_x", p->tau_x},
            {"hyper",
             {{"a_v", p->hyper.a_v}, {"b_v", p->hyper.b_v}, {"a_x", p->hyper.a_x},
              {"b_x", p->hyper.b_x}}}};
  }
  if (const auto* p = std::get_if<LfrmParams>(&params)) {
    return {{"weights", rows_to_json(p->weights, p->num_features, p->num_features)},
            {"tau", p->tau},
            {"symmetric", p->symmetric},
            {"a", p->a},
            {"b", p->b},
            {"step", p->step}};
  }
  const auto& p = std::get<PyCloneParams>(params);
  return {{"v", rows_to_json(p.v, p.num_features, p.samples)},
          {"error_rate", p.error_rate},
          {"het_vaf", p.het_vaf},
          {"a_v", p.a_v},
          {"b_v", p.b_v},
          {"step", p.step}};
}

ModelParams params_from_json(ModelKind kind, const Json& j, std::size_t dims) {
  switch (kind) {
    case ModelKind::LinearGaussian: {
      reject_unknown_keys(j, {"features", "tau_v", "tau_x", "hyper"}, "params");
      LinearGaussianParams p;
      p.num_features = j.at("features").size();
      p.dims = dims;
      p.features = rows_from_json(j.at("features"), p.num_features, dims, "params.features");
      p.tau_v = j.at("tau_v").get<double>();
      p.tau_x = j.at("tau_x").get<double>();
      if (j.contains("hyper")) {
        const auto& h = j.at("hyper");
        reject_unknown_keys(h, {"a_v", "b_v", "a_x", "b_x"}, "params.hyper");
        p.hyper = {get_or(h, "a_v", 1.0), get_or(h, "b_v", 1.0), get_or(h, "a_x", 1.0),
                   get_or(h, "b_x", 1.0)};
      }
      return p;
    }
    case ModelKind::Lfrm: {
      reject_unknown_keys(j, {"weights", "tau", "symmetric", "a", "b", "step"}, "params");
      LfrmParams p;
      p.num_features = j.at("weights").size();
      p.weights = rows_from_json(j.at("weights"), p.num_features, p.num_features,
                                 "params.weights");
      p.tau = j.at("tau").get<double>();
      p.symmetric = get_or(j, "symmetric", false);
      p.a = get_or(j, "a", 1.0);
      p.b = get_or(j, "b", 1.0);
      p.step = get_or(j, "step", 0.5);
      return p;
    }
    case ModelKind::PyClone: {
      reject_unknown_keys(j, {"v", "error_rate", "het_vaf", "a_v", "b_v", "step"}, "params");
      PyCloneParams p;
      p.num_features = j.at("v").size();
      p.samples = dims;
      p.v = rows_from_json(j.at("v"), p.num_features, dims, "params.v");
      p.error_rate = get_or(j, "error_rate", 0.01);
      p.het_vaf = get_or(j, "het_vaf", 0.5);
      p.a_v = get_or(j, "a_v", 1.0);
      p.b_v = get_or(j, "b_v", 1.0);
      p.step = get_or(j, "step", 0.5);
      return p;
    }
  }
  throw ContractViolation("unknown model kind");
}

Json sim_spec_to_json(const SimSpec& spec) {
  Json j = {{"model", to_string(spec.model)},
            {"prior", prior_to_json(spec.prior)},
            {"rows", spec.rows},
            {"dims", spec.dims},
            {"tau_v", spec.tau_v},
            {"tau_x", spec.tau_x},
            {"lfrm_tau", spec.lfrm_tau},
            {"symmetric", spec.symmetric},
            {"a_v", spec.a_v},
            {"b_v", spec.b_v},
            {"mean_depth", spec.mean_depth},
            {"missing_fraction", spec.missing_fraction},
            {"seed", spec.seed},
            {"max_attempts", spec.max_attempts}};
  if (spec.z) j["z"] = matrix_to_json(*spec.z);
  if (spec.feature_values) j["feature_values"] = *spec.feature_values;
  return j;
}

SimSpec sim_spec_from_json(const Json& j) {
  reject_unknown_keys(j,
                      {"model", "prior", "rows", "dims", "tau_v", "tau_x", "lfrm_tau",
                       "symmetric", "a_v", "b_v", "mean_depth", "missing_fraction", "seed",
                       "max_attempts", "z", "feature_values"},
                      "simulation");
  SimSpec spec;
  try {
    if (j.contains("model")) spec.model = model_kind_from_string(j.at("model").get<std::string>());
    if (j.contains("prior")) spec.prior = prior_from_json(j.at("prior"));
    spec.rows = get_or(j, "rows", spec.rows);
    spec.dims = get_or(j, "dims", spec.dims);
    spec.tau_v = get_or(j, "tau_v", spec.tau_v);
    spec.tau_x = get_or(j, "tau_x", spec.tau_x);
    spec.lfrm_tau = get_or(j, "lfrm_tau", spec.lfrm_tau);
    spec.symmetric = get_or(j, "symmetric", spec.symmetric);
    spec.a_v = get_or(j, "a_v", spec.a_v);
    spec.b_v = get_or(j, "b_v", spec.b_v);
    spec.mean_depth = get_or(j, "mean_depth", spec.mean_depth);
    spec.missing_fraction = get_or(j, "missing_fraction", spec.missing_fraction);
    spec.seed = get_or(j, "seed", spec.seed);
    spec.max_attempts = get_or(j, "max_attempts", spec.max_attempts);
    if (j.contains("z")) spec.z = matrix_from_json(j.at("z"));
    if (j.contains("feature_values")) {
      spec.feature_values = j.at("feature_values").get<std::vector<double>>();
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("simulation: ") + e.what());
  }
  spec.validate();
  return spec;
}

ModelKind DatasetDocument::model() const {
  switch (data.index()) {
    case 0:
      return ModelKind::LinearGaussian;
    case 1:
      return ModelKind::Lfrm;
    default:
      return ModelKind::PyClone;
  }
}

DatasetDocument to_document(const SimResult& sim) {
  return {sim.data, sim.heldout, sim};
}

Json dataset_to_json(const DatasetDocument& doc) {
  Json j = {{"format", kFormat}, {"version", kVersion}, {"model", to_string(doc.model())}};
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, CountData>) {
          j["shape"] = {{"rows", d.rows()}, {"cols", d.cols()}};
          j["data"] = masked_to_json(d.variant_reads);
          j["depth"] = rows_to_json(d.depth.values, d.rows(), d.cols());
        } else {
          j["shape"] = {{"rows", d.rows}, {"cols", d.cols}};
          j["data"] = masked_to_json(d);
        }
      },
      doc.data);
  Json heldout = Json::array();
  for (const auto& e : doc.heldout) {
    heldout.push_back({{"row", e.row}, {"col", e.col}, {"value", e.value}});
  }
  j["heldout"] = std::move(heldout);
  if (doc.truth) {
    j["truth"] = {{"prior", prior_to_json(doc.truth->prior)},
                  {"z", matrix_to_json(doc.truth->z)},
                  {"params", params_to_json(doc.truth->params)},
                  {"log_density", doc.truth->log_density}};
  }
  return j;
}

DatasetDocument dataset_from_json(const Json& j) {
  try {
    reject_unknown_keys(j, {"format", "version", "model", "shape", "data", "depth", "heldout", "truth"},
                        "dataset");
    if (j.at("format").get<std::string>() != kFormat) {
      throw ValidationError("dataset: unrecognised format tag");
    }
    if (j.at("version").get<int>() != kVersion) throw ValidationError("dataset: unsupported version");
    const ModelKind kind = model_kind_from_string(j.at("model").get<std::string>());
    const std::size_t rows = j.at("shape").at("rows").get<std::size_t>();
    const std::size_t cols = j.at("shape").at("cols").get<std::size_t>();
    DatasetDocument doc;
    switch (kind) {
      case ModelKind::LinearGaussian:
        doc.data = masked_from_json<double>(j.at("data"), rows, cols, "dataset.data");
        break;
      case ModelKind::Lfrm:
        doc.data = masked_from_json<std::uint8_t>(j.at("data"), rows, cols, "dataset.data");
        break;
      case ModelKind::PyClone: {
        CountData counts;
        counts.variant_reads = masked_from_json<int>(j.at("data"), rows, cols, "dataset.data");
        counts.depth = masked_from_json<int>(j.at("depth"), rows, cols, "dataset.depth");
        counts.depth.observed = counts.variant_reads.observed;
        doc.data = std::move(counts);
        break;
      }
    }
    validate(doc.data);
    for (const auto& e : j.at("heldout")) {
      reject_unknown_keys(e, {"row", "col", "value"}, "dataset.heldout");
      HeldOutEntry entry{e.at("row").get<std::size_t>(), e.at("col").get<std::size_t>(),
                         e.at("value").get<double>()};
      if (entry.row >= rows || entry.col >= cols) {
        throw ValidationError("dataset.heldout: entry out of range");
      }
      doc.heldout.push_back(entry);
    }
    if (j.contains("truth")) {
      const auto& t = j.at("truth");
      reject_unknown_keys(t, {"prior", "z", "params", "log_density"}, "dataset.truth");
      SimResult truth;
      truth.data = doc.data;
      truth.heldout = doc.heldout;
      truth.prior = prior_from_json(t.at("prior"));
      truth.z = matrix_from_json(t.at("z"));
      if (truth.z.rows() != rows) throw ValidationError("dataset.truth: Z has the wrong number of rows");
      truth.params = params_from_json(kind, t.at("params"), cols);
      if (featalloc::num_features(truth.params) != truth.z.cols()) {
        throw ValidationError("dataset.truth: parameter and allocation widths differ");
      }
      truth.log_density = t.at("log_density").get<double>();
      doc.truth = std::move(truth);
    }
    return doc;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("dataset: ") + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
  out << j.dump(1) << '\n';
  if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ValidationError("'" + path.string() + "': " + e.what());
  }
}

}  // namespace featalloc
