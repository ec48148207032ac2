#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "vcell/ndmath/params.hpp"
#include "vcell/ndmath/tape.hpp"

namespace vcell {

/// Builds a 1x1 loss on the given tape from the given parameters.
using LossFn = std::function<Var(Tape&, const ParamSet&)>;

struct GradCheckOptions {
  double step = 1e-5;
  /// Coordinates sampled per tensor; tensors at or below this size are checked exhaustively.
  Index samples_per_tensor = 16;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  Index worst_index = -1;
  Index checked = 0;
};

/// Compares tape gradients with central differences; relative error is
/// |analytic - numeric| / max(1, |analytic|). Throws NumericError on a non-finite loss.
GradCheckResult grad_check(const LossFn& loss, const ParamSet& params, const GradCheckOptions& opts = {});

double evaluate_loss(const LossFn& loss, const ParamSet& params);

}  // namespace vcell
