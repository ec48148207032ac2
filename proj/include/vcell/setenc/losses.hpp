#pragma once

#include <vector>

#include "vcell/ndmath/tape.hpp"
#include "vcell/setenc/types.hpp"

namespace vcell::setenc {

struct AeLossTerms {
  Var mse;
  Var mmd;
  Var total;
};

/// L_MSE + lambda * L_MMD. L_MSE is the per-entry mean squared reconstruction
/// error of each population, summed over the two populations; L_MMD sums the
/// per-set MMD^2 of both populations and averages over the B sets.
AeLossTerms ae_loss(Tape& tape, const CellSetBatch& x0, const CellSetBatch& x1, Var x0_hat, Var x1_hat,
                    double lambda_mmd, const std::vector<double>& bandwidths);

double ae_loss(const CellSetBatch& x0, const CellSetBatch& x1, const CellSetBatch& x0_hat,
               const CellSetBatch& x1_hat, double lambda_mmd, const std::vector<double>& bandwidths);

}  // namespace vcell::setenc
