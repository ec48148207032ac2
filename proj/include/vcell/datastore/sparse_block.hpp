#pragma once

#include <cstdint>
#include <vector>

#include "vcell/ndmath/tensor.hpp"

namespace vcell::datastore {

/// Corrupt or inconsistent stored data.
class CorruptionError : public DataError {
 public:
  using DataError::DataError;
};

/// CSR block: cells are rows, genes are columns.
struct SparseBlock {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint64_t> offsets{0};
  std::vector<std::uint32_t> indices;
  std::vector<float> values;

  std::uint64_t nnz() const { return static_cast<std::uint64_t>(values.size()); }

  /// Throws CorruptionError when an invariant fails.
  void validate() const;

  bool operator==(const SparseBlock& other) const = default;
};

SparseBlock empty_block(std::uint32_t cols);

/// Exact zeros are dropped; values are rounded to float.
template <typename Derived>
SparseBlock to_sparse(const Eigen::MatrixBase<Derived>& dense) {
  SparseBlock b;
  b.rows = static_cast<std::uint32_t>(dense.rows());
  b.cols = static_cast<std::uint32_t>(dense.cols());
  b.offsets.reserve(static_cast<std::size_t>(dense.rows()) + 1);
  for (Index r = 0; r < dense.rows(); ++r) {
    for (Index c = 0; c < dense.cols(); ++c) {
      const auto v = static_cast<float>(dense(r, c));
      if (v != 0.0f) {
        b.indices.push_back(static_cast<std::uint32_t>(c));
        b.values.push_back(v);
      }
    }
    b.offsets.push_back(b.values.size());
  }
  return b;
}

template <typename Scalar = double>
Matrix<Scalar> to_dense(const SparseBlock& b) {
  Matrix<Scalar> out = Matrix<Scalar>::Zero(b.rows, b.cols);
  for (std::uint32_t r = 0; r < b.rows; ++r) {
    for (std::uint64_t k = b.offsets[r]; k < b.offsets[r + 1]; ++k) {
      out(r, b.indices[k]) = static_cast<Scalar>(b.values[k]);
    }
  }
  return out;
}

SparseBlock vstack(const std::vector<SparseBlock>& blocks);
SparseBlock select_rows(const SparseBlock& b, const std::vector<Index>& rows);
/// Keeps the given genes in the given order.
SparseBlock select_columns(const SparseBlock& b, const std::vector<Index>& genes);

}  // namespace vcell::datastore
