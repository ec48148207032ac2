#include "vcell/celleval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace vcell::celleval {

DeltaEffect pseudobulk_delta(const PerturbationGroup& group) {
  if (group.pert.rows() < 1 || group.ctrl.rows() < 1 || group.pred.rows() < 1) {
    throw ArgumentError("pseudobulk_delta: group '" + group.id + "' has an empty side");
  }
  if (group.pert.cols() != group.ctrl.cols() || group.pred.cols() != group.ctrl.cols()) {
    throw DimensionError("pseudobulk_delta: gene count mismatch in group '" + group.id + "'");
  }
  const VectorXd ctrl_mean = group.ctrl.colwise().mean().transpose();
  return {group.pert.colwise().mean().transpose() - ctrl_mean, group.pred.colwise().mean().transpose() - ctrl_mean};
}

double pdcorr(const std::vector<DeltaEffect>& deltas) {
  if (deltas.empty()) throw ArgumentError("pdcorr: no perturbations");
  double sum = 0.0;
  for (const auto& d : deltas) sum += pearson(d.pred, d.truth);
  return sum / static_cast<double>(deltas.size());
}

namespace {

double distance(const VectorXd& a, const VectorXd& b, Distance d) {
  switch (d) {
    case Distance::L1:
      return (a - b).lpNorm<1>();
    case Distance::L2:
      return (a - b).norm();
    case Distance::Cosine: {
      const double na = a.norm(), nb = b.norm();
      if (na == 0.0 || nb == 0.0) return 1.0;
      return 1.0 - a.dot(b) / (na * nb);
    }
  }
  return 0.0;
}

}  // namespace

std::vector<Index> pds_ranks(const std::vector<DeltaEffect>& deltas, Distance d) {
  if (deltas.size() < 2) throw ArgumentError("pds: need at least two perturbations");
  std::vector<Index> ranks(deltas.size(), 0);
  for (std::size_t l = 0; l < deltas.size(); ++l) {
    const double own = distance(deltas[l].pred, deltas[l].truth, d);
    for (std::size_t p = 0; p < deltas.size(); ++p) {
      if (p != l && distance(deltas[l].pred, deltas[p].truth, d) < own) ++ranks[l];
    }
  }
  return ranks;
}

double pds(const std::vector<DeltaEffect>& deltas, Distance d) {
  const auto ranks = pds_ranks(deltas, d);
  const double m = static_cast<double>(deltas.size());
  double sum = 0.0;
  for (Index r : ranks) sum += static_cast<double>(r) / m;
  return 1.0 - sum / m;
}

ErrorMetrics error_metrics(const std::vector<DeltaEffect>& deltas) {
  if (deltas.empty()) throw ArgumentError("error_metrics: no perturbations");
  ErrorMetrics out;
  for (const auto& d : deltas) {
    out.mae += (d.pred - d.truth).lpNorm<1>();
    out.mse += (d.pred - d.truth).squaredNorm();
  }
  out.mae /= static_cast<double>(deltas.size());
  out.mse /= static_cast<double>(deltas.size());
  return out;
}

double r_squared(const Eigen::Ref<const VectorXd>& pred, const Eigen::Ref<const VectorXd>& truth) {
  if (pred.size() != truth.size()) throw DimensionError("r_squared: length mismatch");
  if (truth.size() < 2) throw ArgumentError("r_squared: need at least two entries");
  const double sst = (truth.array() - truth.mean()).square().sum();
  if (sst == 0.0) return 0.0;
  return 1.0 - (truth - pred).squaredNorm() / sst;
}

DEResult differential_expression(const Tensor& cells, const Tensor& ctrl, double alpha, double eps) {
  DEResult out;
  out.pvals = wilcoxon_pvals(cells, ctrl);
  out.padj = bh_adjust(out.pvals);
  out.lfc = log_fold_changes(cells.colwise().mean().transpose().cwiseMax(0.0),
                             ctrl.colwise().mean().transpose().cwiseMax(0.0), eps);
  for (Index g = 0; g < out.padj.size(); ++g) {
    if (out.padj(g) < alpha) out.significant.push_back(g);
  }
  return out;
}

std::vector<Index> top_k_by_abs_lfc(const std::vector<Index>& genes, const VectorXd& lfc, std::size_t k) {
  std::vector<Index> sorted = genes;
  std::stable_sort(sorted.begin(), sorted.end(), [&](Index a, Index b) {
    const double fa = std::abs(lfc(a)), fb = std::abs(lfc(b));
    return fa != fb ? fa > fb : a < b;
  });
  if (sorted.size() > k) sorted.resize(k);
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

namespace {

std::size_t intersection_size(const std::vector<Index>& a, const std::vector<Index>& b) {
  std::vector<Index> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  return both.size();
}

double sign(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

}  // namespace

DEPattern de_pattern_metrics(const DEResult& truth, const DEResult& pred) {
  if (truth.lfc.size() != pred.lfc.size()) throw DimensionError("de_pattern_metrics: gene universe mismatch");
  DEPattern out;
  const std::size_t k_truth = truth.significant.size(), k_pred = pred.significant.size();
  if (k_truth > 0) {
    const auto top_pred = top_k_by_abs_lfc(pred.significant, pred.lfc, k_truth);
    out.overlap = static_cast<double>(intersection_size(truth.significant, top_pred)) / static_cast<double>(k_truth);
  }
  if (k_pred > 0) {
    const auto top_truth = top_k_by_abs_lfc(truth.significant, truth.lfc, k_pred);
    out.precision = static_cast<double>(intersection_size(top_truth, pred.significant)) / static_cast<double>(k_pred);
  }
  std::vector<Index> both;
  std::set_intersection(truth.significant.begin(), truth.significant.end(), pred.significant.begin(),
                        pred.significant.end(), std::back_inserter(both));
  if (!both.empty()) {
    std::size_t agree = 0;
    for (Index g : both) agree += sign(truth.lfc(g)) == sign(pred.lfc(g)) ? 1 : 0;
    out.direction = static_cast<double>(agree) / static_cast<double>(both.size());
  }
  if (k_truth > 0) {
    VectorXd a(static_cast<Index>(k_truth)), b(static_cast<Index>(k_truth));
    for (std::size_t i = 0; i < k_truth; ++i) {
      a(static_cast<Index>(i)) = truth.lfc(truth.significant[i]);
      b(static_cast<Index>(i)) = pred.lfc(truth.significant[i]);
    }
    out.spearman = spearman(a, b);
  }
  return out;
}

std::optional<double> auroc(const std::vector<bool>& labels, const Eigen::Ref<const VectorXd>& scores) {
  if (static_cast<Index>(labels.size()) != scores.size()) throw DimensionError("auroc: length mismatch");
  const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), true));
  const double neg = static_cast<double>(labels.size()) - pos;
  if (pos == 0.0 || neg == 0.0) return std::nullopt;
  const VectorXd ranks = average_ranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) rank_sum += ranks(static_cast<Index>(i));
  }
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

std::optional<double> auprc(const std::vector<bool>& labels, const Eigen::Ref<const VectorXd>& scores) {
  if (static_cast<Index>(labels.size()) != scores.size()) throw DimensionError("auprc: length mismatch");
  const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), true));
  if (pos == 0.0 || pos == static_cast<double>(labels.size())) return std::nullopt;
  std::vector<Index> order(labels.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return scores(a) > scores(b); });
  double tp = 0.0, seen = 0.0, ap = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    double group_pos = 0.0;
    while (j < order.size() && scores(order[j]) == scores(order[i])) {
      group_pos += labels[static_cast<std::size_t>(order[j])] ? 1.0 : 0.0;
      ++j;
    }
    tp += group_pos;
    seen += static_cast<double>(j - i);
    ap += (group_pos / pos) * (tp / seen);
    i = j;
  }
  return ap;
}

RankingMetrics ranking_metrics(const DEResult& truth, const DEResult& pred) {
  if (truth.padj.size() != pred.padj.size()) throw DimensionError("ranking_metrics: gene universe mismatch");
  std::vector<bool> labels(static_cast<std::size_t>(truth.padj.size()), false);
  for (Index g : truth.significant) labels[static_cast<std::size_t>(g)] = true;
  const VectorXd scores = -(pred.padj.array().max(std::numeric_limits<double>::min())).log();
  return {auroc(labels, scores), auprc(labels, scores)};
}

}  // namespace vcell::celleval
