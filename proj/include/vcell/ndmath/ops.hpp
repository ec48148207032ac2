#pragma once

#include <cmath>

#include "vcell/ndmath/tensor.hpp"

// Value-level kernels shared by the tape primitives and by callers that only
// need a forward pass. All of them work on any Eigen dense expression.
namespace vcell {

template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> matmul(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner extents differ " + shape_str(a.rows(), a.cols()) + " * " +
                         shape_str(b.rows(), b.cols()));
  }
  return a * b;
}

template <typename Derived>
RowVector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  if (v.size() == 0) {
    throw ArgumentError("softmax: empty vector");
  }
  RowVector<Scalar> out = v.reshaped().transpose();
  const Scalar top = out.maxCoeff();
  for (Index i = 0; i < out.size(); ++i) {
    out(i) = std::exp(out(i) - top);
  }
  out /= out.sum();
  return out;
}

/// Row-wise softmax; each row is normalized independently.
template <typename Derived>
Matrix<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& m) {
  Matrix<typename Derived::Scalar> out(m.rows(), m.cols());
  for (Index r = 0; r < m.rows(); ++r) {
    out.row(r) = softmax(m.row(r));
  }
  return out;
}

template <typename DerivedX, typename DerivedG>
RowVector<typename DerivedX::Scalar> rmsnorm(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedG>& gain,
                                             typename DerivedX::Scalar eps) {
  using Scalar = typename DerivedX::Scalar;
  if (x.size() != gain.size()) {
    throw DimensionError("rmsnorm: gain width differs from input width");
  }
  const Scalar ms = x.squaredNorm() / static_cast<Scalar>(x.size());
  const Scalar denom = std::sqrt(ms + eps);
  if (denom == Scalar(0)) {
    return RowVector<Scalar>::Zero(x.size());
  }
  RowVector<Scalar> out(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    out(i) = gain(i) * x(i) / denom;
  }
  return out;
}

/// Scaled dot-product attention softmax(Q K^T / sqrt(d)) V for a single head.
template <typename DQ, typename DK, typename DV>
Matrix<typename DQ::Scalar> attention(const Eigen::MatrixBase<DQ>& q, const Eigen::MatrixBase<DK>& k,
                                      const Eigen::MatrixBase<DV>& v) {
  using Scalar = typename DQ::Scalar;
  if (k.rows() == 0) {
    throw ArgumentError("attention: empty key sequence");
  }
  if (q.cols() != k.cols() || k.rows() != v.rows() || q.cols() == 0) {
    throw DimensionError("attention: incompatible Q/K/V shapes");
  }
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(q.cols()));
  Matrix<Scalar> scores = (q * k.transpose()) * scale;
  return softmax_rows(scores) * v;
}

template <typename Scalar>
Scalar silu(Scalar x) {
  return x / (Scalar(1) + std::exp(-x));
}

}  // namespace vcell
