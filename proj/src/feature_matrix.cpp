#include "featalloc/feature_matrix.hpp"

#include <algorithm>
#include <numeric>

#include "featalloc/errors.hpp"

namespace featalloc {

Permutation::Permutation(std::vector<std::size_t> forward)
    : forward_(std::move(forward)), inverse_(forward_.size(), forward_.size()) {
  for (std::size_t i = 0; i < forward_.size(); ++i) {
    require(forward_[i] < forward_.size() && inverse_[forward_[i]] == forward_.size(),
            "Permutation: not a bijection");
    inverse_[forward_[i]] = i;
  }
}

Permutation Permutation::identity(std::size_t size) {
  std::vector<std::size_t> f(size);
  std::iota(f.begin(), f.end(), std::size_t{0});
  return Permutation(std::move(f));
}

Permutation Permutation::inverse() const { return Permutation(inverse_); }

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), bits_(rows * cols, 0), counts_(cols, 0) {}

FeatureMatrix FeatureMatrix::from_rows(const std::vector<std::vector<int>>& rows) {
  const std::size_t k = rows.empty() ? 0 : rows.front().size();
  FeatureMatrix z(rows.size(), k);
  for (std::size_t n = 0; n < rows.size(); ++n) {
    require(rows[n].size() == k, "FeatureMatrix: ragged rows");
    for (std::size_t j = 0; j < k; ++j) {
      require(rows[n][j] == 0 || rows[n][j] == 1, "FeatureMatrix: entries must be 0/1");
      z.set(n, j, static_cast<Bit>(rows[n][j]));
    }
  }
  return z;
}

void FeatureMatrix::set(std::size_t n, std::size_t k, Bit value) {
  require(value <= 1, "FeatureMatrix: entries must be 0 or 1");
  Bit& cell = bits_[n * cols_ + k];
  const Bit v = value;
  counts_[k] = counts_[k] - cell + v;
  cell = v;
}

void FeatureMatrix::set_row(std::size_t n, std::span<const Bit> values) {
  require(values.size() == cols_, "set_row: length mismatch");
  for (std::size_t k = 0; k < cols_; ++k) set(n, k, values[k]);
}

void FeatureMatrix::append_cols(std::size_t count) {
  if (count == 0) return;
  const std::size_t new_cols = cols_ + count;
  std::vector<Bit> bits(rows_ * new_cols, 0);
  for (std::size_t n = 0; n < rows_; ++n) {
    std::copy_n(bits_.begin() + n * cols_, cols_, bits.begin() + n * new_cols);
  }
  bits_ = std::move(bits);
  counts_.resize(new_cols, 0);
  cols_ = new_cols;
}

void FeatureMatrix::remove_cols(std::span<const std::size_t> cols) {
  if (cols.empty()) return;
  std::vector<char> drop(cols_, 0);
  for (std::size_t k : cols) {
    require(k < cols_ && !drop[k], "remove_cols: bad column index");
    drop[k] = 1;
  }
  const std::size_t new_cols = cols_ - cols.size();
  std::vector<Bit> bits(rows_ * new_cols);
  std::vector<std::size_t> counts;
  counts.reserve(new_cols);
  for (std::size_t k = 0; k < cols_; ++k) {
    if (!drop[k]) counts.push_back(counts_[k]);
  }
  for (std::size_t n = 0; n < rows_; ++n) {
    std::size_t out = 0;
    for (std::size_t k = 0; k < cols_; ++k) {
      if (!drop[k]) bits[n * new_cols + out++] = bits_[n * cols_ + k];
    }
  }
  bits_ = std::move(bits);
  counts_ = std::move(counts);
  cols_ = new_cols;
}

std::vector<std::size_t> FeatureMatrix::remove_empty_cols() {
  std::vector<std::size_t> empty;
  for (std::size_t k = 0; k < cols_; ++k) {
    if (counts_[k] == 0) empty.push_back(k);
  }
  remove_cols(empty);
  return empty;
}

FeatureMatrix FeatureMatrix::permute_cols(const Permutation& sigma) const {
  require(sigma.size() == cols_, "permute_cols: size mismatch");
  FeatureMatrix out(rows_, cols_);
  for (std::size_t n = 0; n < rows_; ++n) {
    for (std::size_t k = 0; k < cols_; ++k) out.set(n, k, (*this)(n, sigma(k)));
  }
  return out;
}

FeatureMatrix FeatureMatrix::permute_rows(const Permutation& sigma) const {
  require(sigma.size() == rows_, "permute_rows: size mismatch");
  FeatureMatrix out(rows_, cols_);
  for (std::size_t n = 0; n < rows_; ++n) out.set_row(n, row(sigma(n)));
  return out;
}

std::vector<Bit> FeatureMatrix::column(std::size_t k) const {
  std::vector<Bit> out(rows_);
  for (std::size_t n = 0; n < rows_; ++n) out[n] = (*this)(n, k);
  return out;
}

}  // namespace featalloc
