#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "featalloc/errors.hpp"

namespace featalloc {

using Bit = std::uint8_t;
/// Binary feature usage vector of one data point.
using FeatureRow = std::vector<Bit>;

/// Bijection on {0, .., K-1}. apply(v)[i] == v[forward(i)].
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<std::size_t> forward);

  static Permutation identity(std::size_t size);

  std::size_t size() const { return forward_.size(); }
  std::size_t operator()(std::size_t i) const { return forward_[i]; }
  std::size_t inverse_at(std::size_t i) const { return inverse_[i]; }
  std::span<const std::size_t> forward() const { return forward_; }

  Permutation inverse() const;

  /// Returns (v[σ(0)], .., v[σ(K-1)]).
  template <typename T>
  std::vector<T> apply(std::span<const T> v) const;
  template <typename T>
  std::vector<T> apply(const std::vector<T>& v) const {
    return apply(std::span<const T>(v));
  }

 private:
  std::vector<std::size_t> forward_;
  std::vector<std::size_t> inverse_;
};

/// N x K binary matrix with cached column sums. Confined to one chain.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols);

  static FeatureMatrix from_rows(const std::vector<std::vector<int>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Bit operator()(std::size_t n, std::size_t k) const { return bits_[n * cols_ + k]; }
  void set(std::size_t n, std::size_t k, Bit value);

  std::span<const Bit> row(std::size_t n) const {
    return {bits_.data() + n * cols_, cols_};
  }
  void set_row(std::size_t n, std::span<const Bit> values);

  std::size_t col_count(std::size_t k) const { return counts_[k]; }
  std::span<const std::size_t> col_counts() const { return counts_; }
  /// m_k with row n removed.
  std::size_t col_count_excluding(std::size_t k, std::size_t n) const {
    return counts_[k] - (*this)(n, k);
  }

  /// Appends `count` all-zero columns.
  void append_cols(std::size_t count);
  /// Removes the listed columns (any order, no duplicates).
  void remove_cols(std::span<const std::size_t> cols);
  /// Drops all columns with m_k == 0 and returns their former indices (ascending).
  std::vector<std::size_t> remove_empty_cols();

  FeatureMatrix permute_cols(const Permutation& sigma) const;
  FeatureMatrix permute_rows(const Permutation& sigma) const;
  std::vector<Bit> column(std::size_t k) const;

  bool operator==(const FeatureMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && bits_ == other.bits_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Bit> bits_;
  std::vector<std::size_t> counts_;
};

template <typename T>
std::vector<T> Permutation::apply(std::span<const T> v) const {
  require(v.size() == forward_.size(), "apply_permutation: length mismatch");
  std::vector<T> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[forward_[i]];
  return out;
}

}  // namespace featalloc
