#include "vcell/datastore/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vcell::datastore {

SparseBlock normalize_log1p(const SparseBlock& counts, double target_sum, double scale) {
  if (!(target_sum > 0.0)) throw ConfigError("normalize: target_sum must be positive");
  counts.validate();
  SparseBlock out = counts;
  for (std::uint32_t r = 0; r < counts.rows; ++r) {
    double lib = 0.0;
    for (std::uint64_t k = counts.offsets[r]; k < counts.offsets[r + 1]; ++k) {
      if (counts.values[k] < 0.0f) throw DataError("normalize: negative count in row " + std::to_string(r));
      lib += counts.values[k];
    }
    if (lib == 0.0) continue;
    for (std::uint64_t k = counts.offsets[r]; k < counts.offsets[r + 1]; ++k) {
      out.values[k] = static_cast<float>(scale * std::log1p(counts.values[k] / lib * target_sum));
    }
  }
  return out;
}

Eigen::VectorXd gene_variances(const std::vector<const SparseBlock*>& blocks) {
  if (blocks.empty()) throw ArgumentError("gene_variances: no blocks");
  const std::uint32_t cols = blocks.front()->cols;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(cols), sq = Eigen::VectorXd::Zero(cols);
  double n = 0.0;
  for (const auto* b : blocks) {
    if (b->cols != cols) throw DimensionError("gene_variances: width mismatch");
    n += b->rows;
    for (std::uint64_t k = 0; k < b->nnz(); ++k) {
      sum(b->indices[k]) += b->values[k];
      sq(b->indices[k]) += static_cast<double>(b->values[k]) * b->values[k];
    }
  }
  if (n == 0.0) return Eigen::VectorXd::Zero(cols);
  const Eigen::VectorXd mean = sum / n;
  return (sq / n - mean.cwiseProduct(mean)).cwiseMax(0.0);
}

std::vector<Index> top_variance_genes(const Eigen::Ref<const Eigen::VectorXd>& variances, Index keep) {
  const Index g = variances.size();
  if (keep < 0 || keep > g) throw ConfigError("hvg: cannot keep " + std::to_string(keep) + " of " +
                                              std::to_string(g) + " genes");
  std::vector<Index> order(static_cast<std::size_t>(g));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return variances(a) > variances(b); });
  order.resize(static_cast<std::size_t>(keep));
  std::sort(order.begin(), order.end());
  return order;
}

Dataset prepare_dataset(const Dataset& raw, const PrepareConfig& cfg) {
  raw.validate();
  Dataset out;
  out.labels = raw.labels;
  for (const auto& [k, b] : raw.groups) out.groups[k] = normalize_log1p(b, cfg.target_sum, cfg.scale);
  for (const auto& [k, b] : raw.controls) out.controls[k] = normalize_log1p(b, cfg.target_sum, cfg.scale);

  const Index keep = cfg.hvg == 0 ? raw.gene_count() : cfg.hvg;
  if (keep == raw.gene_count()) {
    out.genes = raw.genes;
    return out;
  }
  std::vector<const SparseBlock*> all;
  for (const auto& [k, b] : out.groups) all.push_back(&b);
  for (const auto& [k, b] : out.controls) all.push_back(&b);
  const auto genes = top_variance_genes(gene_variances(all), keep);
  for (Index g : genes) out.genes.push_back(raw.genes[static_cast<std::size_t>(g)]);
  for (auto& [k, b] : out.groups) b = select_columns(b, genes);
  for (auto& [k, b] : out.controls) b = select_columns(b, genes);
  return out;
}

}  // namespace vcell::datastore
