#pragma once

#include <cmath>
#include <span>

#include "vcell/ndmath/tape.hpp"
#include "vcell/ndmath/tensor.hpp"

namespace vcell::setenc {

/// k(a, b) = sum over sigma of exp(-||a - b||^2 / (2 sigma^2)).
template <typename Scalar>
Scalar multi_gaussian_kernel(Scalar sq_dist, std::span<const double> bandwidths) {
  Scalar k = 0;
  for (double s : bandwidths) {
    k += std::exp(-sq_dist / (Scalar(2) * Scalar(s) * Scalar(s)));
  }
  return k;
}

/// Mean kernel value over all ordered pairs (rows of a) x (rows of b), diagonal included.
template <typename DA, typename DB>
typename DA::Scalar mean_kernel(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b,
                                std::span<const double> bandwidths) {
  using Scalar = typename DA::Scalar;
  Scalar total = 0;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.rows(); ++j) {
      total += multi_gaussian_kernel<Scalar>((a.row(i) - b.row(j)).squaredNorm(), bandwidths);
    }
  }
  return total / static_cast<Scalar>(a.rows() * b.rows());
}

/// Lexicographic order on (rows, coefficients); fixes the summation order of
/// the cross term so that mmd2(a, b) and mmd2(b, a) are bitwise equal.
template <typename DA, typename DB>
bool lex_less(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  if (a.rows() != b.rows()) return a.rows() < b.rows();
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) != b(i, j)) return a(i, j) < b(i, j);
    }
  }
  return false;
}

/// Biased (V-statistic) squared MMD between the row sets of a and b.
template <typename DA, typename DB>
typename DA::Scalar mmd2(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b,
                         std::span<const double> bandwidths) {
  if (a.rows() == 0 || b.rows() == 0) {
    throw ArgumentError("mmd2: empty sample set");
  }
  if (a.cols() != b.cols()) {
    throw DimensionError("mmd2: sample widths differ");
  }
  const auto cross = lex_less(b, a) ? mean_kernel(b, a, bandwidths) : mean_kernel(a, b, bandwidths);
  return mean_kernel(a, a, bandwidths) + mean_kernel(b, b, bandwidths) - 2 * cross;
}

}  // namespace vcell::setenc

namespace vcell::ad {

/// Tape primitive for setenc::mmd2, differentiable in both sample sets.
Var mmd2(Var a, Var b, std::vector<double> bandwidths);

}  // namespace vcell::ad
