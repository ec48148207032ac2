#include "vcell/setenc/losses.hpp"

#include <numeric>

#include "vcell/setenc/mmd.hpp"

namespace vcell::ad {
namespace {

// Gradient of mean_{i,j} k(x_i, y_j) with respect to the rows of x.
Tensor kernel_mean_grad(const Tensor& x, const Tensor& y, const std::vector<double>& bw) {
  Tensor g = Tensor::Zero(x.rows(), x.cols());
  const double norm = 1.0 / static_cast<double>(x.rows() * y.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < y.rows(); ++j) {
      const auto diff = x.row(i) - y.row(j);
      const double d2 = diff.squaredNorm();
      double w = 0.0;
      for (double s : bw) {
        w += std::exp(-d2 / (2.0 * s * s)) / (s * s);
      }
      g.row(i) -= diff * (w * norm);
    }
  }
  return g;
}

}  // namespace

Var mmd2(Var a, Var b, std::vector<double> bandwidths) {
  if (a.tape != b.tape) {
    throw ArgumentError("mmd2: operands recorded on different tapes");
  }
  Tape& t = *a.tape;
  Tensor out(1, 1);
  out(0, 0) = setenc::mmd2(a.value(), b.value(), bandwidths);
  const std::size_t ia = a.id, ib = b.id;
  const bool needs = t.requires_grad(a) || t.requires_grad(b);
  return t.record(std::move(out), needs, [ia, ib, bw = std::move(bandwidths)](Tape& tp, std::size_t self) {
    const double g = tp.upstream(self)(0, 0);
    const Tensor& av = tp.value(ia);
    const Tensor& bv = tp.value(ib);
    // Self terms depend on x through both pair positions, hence the factor 2.
    if (tp.requires_grad(ia)) {
      tp.accumulate(ia, g * (2.0 * kernel_mean_grad(av, av, bw) - 2.0 * kernel_mean_grad(av, bv, bw)));
    }
    if (tp.requires_grad(ib)) {
      tp.accumulate(ib, g * (2.0 * kernel_mean_grad(bv, bv, bw) - 2.0 * kernel_mean_grad(bv, av, bw)));
    }
  });
}

}  // namespace vcell::ad

namespace vcell::setenc {
namespace {

void check_pair(const CellSetBatch& x, Var x_hat) {
  if (x.values.rows() != x_hat.rows() || x.values.cols() != x_hat.cols()) {
    throw DimensionError("ae_loss: reconstruction shape differs from its input");
  }
}

std::vector<Index> set_rows(Index b, Index items) {
  std::vector<Index> idx(static_cast<std::size_t>(items));
  std::iota(idx.begin(), idx.end(), b * items);
  return idx;
}

}  // namespace

AeLossTerms ae_loss(Tape& tape, const CellSetBatch& x0, const CellSetBatch& x1, Var x0_hat, Var x1_hat,
                    double lambda_mmd, const std::vector<double>& bandwidths) {
  if (!(lambda_mmd >= 0.0)) {
    throw ConfigError("ae_loss: lambda_mmd must be non-negative");
  }
  check_pair(x0, x0_hat);
  check_pair(x1, x1_hat);
  if (x0.sets < 1 || x0.sets != x1.sets) {
    throw DimensionError("ae_loss: populations must hold the same positive number of sets");
  }
  Var c0 = tape.constant(x0.values);
  Var c1 = tape.constant(x1.values);
  Var mse = ad::add(ad::mean_square(ad::sub(x0_hat, c0)), ad::mean_square(ad::sub(x1_hat, c1)));

  Var mmd;
  const Index sets = x0.sets;
  for (Index b = 0; b < sets; ++b) {
    Var term0 = ad::mmd2(ad::gather_rows(x0_hat, set_rows(b, x0.items)),
                         tape.constant(Tensor(x0.set(b))), bandwidths);
    Var term1 = ad::mmd2(ad::gather_rows(x1_hat, set_rows(b, x1.items)),
                         tape.constant(Tensor(x1.set(b))), bandwidths);
    Var pair = ad::add(term0, term1);
    mmd = b == 0 ? pair : ad::add(mmd, pair);
  }
  mmd = ad::scale(mmd, 1.0 / static_cast<double>(sets));
  return {mse, mmd, ad::add(mse, ad::scale(mmd, lambda_mmd))};
}

double ae_loss(const CellSetBatch& x0, const CellSetBatch& x1, const CellSetBatch& x0_hat,
               const CellSetBatch& x1_hat, double lambda_mmd, const std::vector<double>& bandwidths) {
  Tape tape;
  auto terms = ae_loss(tape, x0, x1, tape.constant(x0_hat.values), tape.constant(x1_hat.values), lambda_mmd,
                       bandwidths);
  return terms.total.value()(0, 0);
}

}  // namespace vcell::setenc
