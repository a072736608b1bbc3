#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "featalloc/synth.hpp"

namespace featalloc {

using Json = nlohmann::json;

Json prior_to_json(const PriorSpec& prior);
PriorSpec prior_from_json(const Json& j);

Json matrix_to_json(const FeatureMatrix& z);
FeatureMatrix matrix_from_json(const Json& j);

Json params_to_json(const ModelParams& params);
/// `dims` supplies D (or M) when the parameter block has no features.
ModelParams params_from_json(ModelKind kind, const Json& j, std::size_t dims);

Json sim_spec_to_json(const SimSpec& spec);
SimSpec sim_spec_from_json(const Json& j);

/// A dataset document, optionally carrying the generating values.
struct DatasetDocument {
  Dataset data;
  std::vector<HeldOutEntry> heldout;
  std::optional<SimResult> truth;

  ModelKind model() const;
};

DatasetDocument to_document(const SimResult& sim);

Json dataset_to_json(const DatasetDocument& doc);
DatasetDocument dataset_from_json(const Json& j);

void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

/// Throws ValidationError if `j` has a key outside `allowed`.
void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed,
                         const std::string& what);

}  // namespace featalloc
