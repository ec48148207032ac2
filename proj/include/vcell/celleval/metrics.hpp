#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vcell/celleval/stats.hpp"

namespace vcell::celleval {

/// Ground-truth perturbed cells, their matched controls and the model's predicted cells for one perturbation.
struct PerturbationGroup {
  std::string id;
  Tensor pert;
  Tensor ctrl;
  Tensor pred;
};

struct DeltaEffect {
  VectorXd truth;
  VectorXd pred;
};

/// Column means; both deltas subtract the same control mean.
DeltaEffect pseudobulk_delta(const PerturbationGroup& group);

/// Mean over perturbations of Pearson(pred, truth).
double pdcorr(const std::vector<DeltaEffect>& deltas);

enum class Distance { L1, L2, Cosine };

/// r_lambda for every perturbation: how many other truths are strictly closer to the prediction than its own.
std::vector<Index> pds_ranks(const std::vector<DeltaEffect>& deltas, Distance d);
double pds(const std::vector<DeltaEffect>& deltas, Distance d);

struct ErrorMetrics {
  double mae = 0.0;
  double mse = 0.0;
};
ErrorMetrics error_metrics(const std::vector<DeltaEffect>& deltas);

/// 1 - SSE/SST; 0 when the truth is constant.
double r_squared(const Eigen::Ref<const VectorXd>& pred, const Eigen::Ref<const VectorXd>& truth);

struct DEResult {
  VectorXd pvals;
  VectorXd padj;
  VectorXd lfc;
  std::vector<Index> significant;
};

/// Wilcoxon + BH of `cells` against `ctrl`; log2 fold changes from column means clamped at 0.
DEResult differential_expression(const Tensor& cells, const Tensor& ctrl, double alpha = 0.05, double eps = 1e-6);

struct DEPattern {
  std::optional<double> overlap;
  std::optional<double> precision;
  std::optional<double> direction;
  std::optional<double> spearman;
};

/// The k genes of `genes` with the largest |lfc| (index order breaks ties).
std::vector<Index> top_k_by_abs_lfc(const std::vector<Index>& genes, const VectorXd& lfc, std::size_t k);

DEPattern de_pattern_metrics(const DEResult& truth, const DEResult& pred);

/// Pairwise win + half tie fraction of positives over negatives. Empty when a class is missing.
std::optional<double> auroc(const std::vector<bool>& labels, const Eigen::Ref<const VectorXd>& scores);
/// Average precision, tied scores enter together.
std::optional<double> auprc(const std::vector<bool>& labels, const Eigen::Ref<const VectorXd>& scores);

struct RankingMetrics {
  std::optional<double> auroc;
  std::optional<double> auprc;
};
/// Truth-significant genes are positives, scores are -log(p_adj) of the prediction.
RankingMetrics ranking_metrics(const DEResult& truth, const DEResult& pred);

}  // namespace vcell::celleval
