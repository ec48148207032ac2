#pragma once

#include <vector>

#include "vcell/datastore/dataset.hpp"

namespace vcell::datastore {

struct PrepareConfig {
  double target_sum = 1e4;
  double scale = 10.0;
  /// 0 keeps every gene.
  Index hvg = 0;
};

/// Per cell: counts / library size * target_sum, then log1p, then * scale. All-zero cells stay zero.
SparseBlock normalize_log1p(const SparseBlock& counts, double target_sum = 1e4, double scale = 10.0);

/// Population variance of every gene over the rows of all blocks.
Eigen::VectorXd gene_variances(const std::vector<const SparseBlock*>& blocks);

/// The `keep` highest-variance genes, lower index first on ties; returned in ascending index order.
std::vector<Index> top_variance_genes(const Eigen::Ref<const Eigen::VectorXd>& variances, Index keep);

template <typename Derived>
std::vector<Index> select_hvg(const Eigen::MatrixBase<Derived>& cells, Index keep) {
  const auto n = static_cast<double>(cells.rows());
  const Eigen::RowVectorXd mean = cells.colwise().mean();
  const Eigen::VectorXd var = ((cells.rowwise() - mean).array().square().colwise().sum() / n).transpose();
  return top_variance_genes(var, keep);
}

/// Normalizes every block, then keeps the HVGs (variance over controls and perturbed cells together).
Dataset prepare_dataset(const Dataset& raw, const PrepareConfig& cfg = {});

}  // namespace vcell::datastore
