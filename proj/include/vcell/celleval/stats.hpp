#pragma once

#include <Eigen/Dense>

#include "vcell/ndmath/tensor.hpp"

namespace vcell::celleval {

using Eigen::VectorXd;

/// 1-based ranks, ties get the mean of the positions they span.
VectorXd average_ranks(const Eigen::Ref<const VectorXd>& x);

/// Returns 0 when either side has zero variance.
double pearson(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b);
double spearman(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b);

/// Two-sided exact p for rank sum w of the first sample (sizes n1, n2, no ties).
double wilcoxon_exact_p(double w, Index n1, Index n2);

/// Two-sided rank-sum p-value for one gene.
double wilcoxon_p(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b);

/// One p-value per column.
VectorXd wilcoxon_pvals(const Tensor& pert, const Tensor& ctrl);

VectorXd bh_adjust(const Eigen::Ref<const VectorXd>& p);

VectorXd log_fold_changes(const Eigen::Ref<const VectorXd>& pert_mean, const Eigen::Ref<const VectorXd>& ctrl_mean,
                          double eps);

}  // namespace vcell::celleval
