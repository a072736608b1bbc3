#include "featalloc/dataset.hpp"

#include "featalloc/errors.hpp"

namespace featalloc {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::LinearGaussian:
      return "linear_gaussian";
    case ModelKind::Lfrm:
      return "lfrm";
    case ModelKind::PyClone:
      return "pyclone";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "linear_gaussian" || name == "lg") return ModelKind::LinearGaussian;
  if (name == "lfrm") return ModelKind::Lfrm;
  if (name == "pyclone") return ModelKind::PyClone;
  throw ValidationError("unknown model '" + name + "'");
}

std::size_t dataset_rows(const Dataset& data) {
  return std::visit(
      [](const auto& d) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(d)>, CountData>) {
          return d.rows();
        } else {
          return d.rows;
        }
      },
      data);
}

namespace {

template <typename T>
void check_shape(const MaskedMatrix<T>& m, const char* what) {
  if (m.values.size() != m.rows * m.cols || m.observed.size() != m.rows * m.cols) {
    throw ValidationError(std::string(what) + ": values or mask do not match the declared shape");
  }
}

}  // namespace

void validate(const Dataset& data) {
  if (const auto* real = std::get_if<RealData>(&data)) {
    check_shape(*real, "real data");
  } else if (const auto* rel = std::get_if<RelationData>(&data)) {
    check_shape(*rel, "relation");
    if (rel->rows != rel->cols) throw ValidationError("relation must be square");
    for (std::size_t i = 0; i < rel->values.size(); ++i) {
      if (rel->observed[i] && rel->values[i] > 1) throw ValidationError("relation must be binary");
    }
  } else {
    const auto& counts = std::get<CountData>(data);
    check_shape(counts.variant_reads, "variant reads");
    check_shape(counts.depth, "depth");
    if (counts.depth.rows != counts.rows() || counts.depth.cols != counts.cols()) {
      throw ValidationError("variant reads and depth differ in shape");
    }
    for (std::size_t i = 0; i < counts.variant_reads.values.size(); ++i) {
      if (!counts.variant_reads.observed[i]) continue;
      const int b = counts.variant_reads.values[i];
      const int d = counts.depth.values[i];
      if (b < 0 || d < 0 || b > d) throw ValidationError("read counts must satisfy 0 <= b <= d");
    }
  }
}

}  // namespace featalloc
