#pragma once

#include <cstddef>
#include <cstdint>
#include <type_traits>
#include <string>
#include <variant>
#include <vector>

namespace featalloc {

/// Dense row-major matrix with an observation mask (1 = observed).
template <typename T>
struct MaskedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> values;
  std::vector<std::uint8_t> observed;

  MaskedMatrix() = default;
  MaskedMatrix(std::size_t r, std::size_t c)
      : rows(r), cols(c), values(r * c, T{}), observed(r * c, 1) {}

  T& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  const T& at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  bool is_observed(std::size_t i, std::size_t j) const { return observed[i * cols + j] != 0; }
  std::size_t observed_count() const {
    std::size_t c = 0;
    for (auto o : observed) c += o != 0;
    return c;
  }
};

/// Real-valued N x D observations (linear Gaussian model).
using RealData = MaskedMatrix<double>;

/// Binary N x N relation (latent feature relational model).
using RelationData = MaskedMatrix<std::uint8_t>;

/// Read counts per mutation and sample (PyClone feature model). The mask of
/// `variant_reads` is authoritative.
struct CountData {
  MaskedMatrix<int> variant_reads;  // b_nm
  MaskedMatrix<int> depth;          // d_nm
  std::size_t rows() const { return variant_reads.rows; }
  std::size_t cols() const { return variant_reads.cols; }
  bool is_observed(std::size_t n, std::size_t m) const {
    return variant_reads.is_observed(n, m);
  }
};

using Dataset = std::variant<RealData, RelationData, CountData>;

enum class ModelKind { LinearGaussian, Lfrm, PyClone };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

std::size_t dataset_rows(const Dataset& data);

/// Throws ValidationError unless masks match the data and 0 <= b <= d.
void validate(const Dataset& data);

/// One entry removed from the observed data and kept for evaluation.
struct HeldOutEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

}  // namespace featalloc
