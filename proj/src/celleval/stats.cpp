#include "vcell/celleval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace vcell::celleval {

namespace {

std::vector<Index> argsort(const Eigen::Ref<const VectorXd>& x) {
  std::vector<Index> order(static_cast<std::size_t>(x.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return x(i) < x(j); });
  return order;
}

bool has_ties(const VectorXd& sorted) {
  for (Index i = 1; i < sorted.size(); ++i) {
    if (sorted(i) == sorted(i - 1)) return true;
  }
  return false;
}

}  // namespace

VectorXd average_ranks(const Eigen::Ref<const VectorXd>& x) {
  const auto order = argsort(x);
  VectorXd ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && x(order[j]) == x(order[i])) ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks(order[k]) = r;
    i = j;
  }
  return ranks;
}

double pearson(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b) {
  if (a.size() != b.size()) throw DimensionError("pearson: length mismatch");
  if (a.size() < 2) return 0.0;
  const VectorXd da = a.array() - a.mean();
  const VectorXd db = b.array() - b.mean();
  const double saa = da.squaredNorm(), sbb = db.squaredNorm();
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(da.dot(db) / std::sqrt(saa * sbb), -1.0, 1.0);
}

double spearman(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b) {
  if (a.size() != b.size()) throw DimensionError("spearman: length mismatch");
  return pearson(average_ranks(a), average_ranks(b));
}

double wilcoxon_exact_p(double w, Index n1, Index n2) {
  const Index n = n1 + n2;
  const Index max_sum = n * (n + 1) / 2;
  // count[k][s]: subsets of size k of {1..i} with rank sum s
  std::vector<std::vector<double>> count(static_cast<std::size_t>(n1 + 1),
                                         std::vector<double>(static_cast<std::size_t>(max_sum + 1), 0.0));
  count[0][0] = 1.0;
  for (Index i = 1; i <= n; ++i) {
    for (Index k = std::min(i, n1); k >= 1; --k) {
      for (Index s = max_sum; s >= i; --s) {
        count[static_cast<std::size_t>(k)][static_cast<std::size_t>(s)] +=
            count[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(s - i)];
      }
    }
  }
  const auto& dist = count[static_cast<std::size_t>(n1)];
  double total = 0.0, lower = 0.0, upper = 0.0;
  for (Index s = 0; s <= max_sum; ++s) {
    const double c = dist[static_cast<std::size_t>(s)];
    total += c;
    if (static_cast<double>(s) <= w + 1e-9) lower += c;
    if (static_cast<double>(s) >= w - 1e-9) upper += c;
  }
  return std::min(1.0, 2.0 * std::min(lower, upper) / total);
}

double wilcoxon_p(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b) {
  const Index n1 = a.size(), n2 = b.size();
  if (n1 < 1 || n2 < 1) throw ArgumentError("wilcoxon: empty sample");
  const Index n = n1 + n2;
  VectorXd all(n);
  all << a, b;
  const VectorXd ranks = average_ranks(all);
  const double w = ranks.head(n1).sum();

  VectorXd sorted = all;
  std::sort(sorted.data(), sorted.data() + n);
  if (sorted(0) == sorted(n - 1)) return 1.0;
  if (n <= 12 && !has_ties(sorted)) return wilcoxon_exact_p(w, n1, n2);

  double tie_term = 0.0;
  for (Index i = 0; i < n;) {
    Index j = i + 1;
    while (j < n && sorted(j) == sorted(i)) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2), dn = static_cast<double>(n);
  const double u = w - dn1 * (dn1 + 1.0) / 2.0;
  const double mu = dn1 * dn2 / 2.0;
  const double var = dn1 * dn2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (var <= 0.0) return 1.0;
  const double z = std::max(0.0, std::abs(u - mu) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

VectorXd wilcoxon_pvals(const Tensor& pert, const Tensor& ctrl) {
  if (pert.cols() != ctrl.cols()) throw DimensionError("wilcoxon_pvals: gene count mismatch");
  VectorXd p(pert.cols());
  for (Index g = 0; g < pert.cols(); ++g) p(g) = wilcoxon_p(pert.col(g), ctrl.col(g));
  return p;
}

VectorXd bh_adjust(const Eigen::Ref<const VectorXd>& p) {
  const Index m = p.size();
  for (Index i = 0; i < m; ++i) {
    if (!(p(i) >= 0.0 && p(i) <= 1.0)) throw ArgumentError("bh_adjust: p-value outside [0,1]");
  }
  const auto order = argsort(p);
  VectorXd q(m);
  double running = 1.0;
  for (Index r = m; r >= 1; --r) {
    const Index idx = order[static_cast<std::size_t>(r - 1)];
    const double scaled = std::max(p(idx), p(idx) * (static_cast<double>(m) / static_cast<double>(r)));
    running = std::min(running, std::min(1.0, scaled));
    q(idx) = running;
  }
  return q;
}

VectorXd log_fold_changes(const Eigen::Ref<const VectorXd>& pert_mean, const Eigen::Ref<const VectorXd>& ctrl_mean,
                          double eps) {
  if (pert_mean.size() != ctrl_mean.size()) throw DimensionError("log_fold_changes: length mismatch");
  return ((pert_mean.array() + eps) / (ctrl_mean.array() + eps)).log() / std::log(2.0);
}

}  // namespace vcell::celleval
