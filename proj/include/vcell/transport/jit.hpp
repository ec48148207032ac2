#pragma once

#include <random>
#include <vector>

#include "vcell/ndmath/params.hpp"
#include "vcell/ndmath/tape.hpp"
#include "vcell/transport/types.hpp"

namespace vcell::transport {

void init_heads(ParamSet& params, JitVariant variant, Index latent_width, std::mt19937_64& rng);

struct JitPrediction {
  Var endpoint;      // Z1_hat
  Var displacement;  // U_hat
};

/// Completes the pair from the active head's output: endpoint heads give
/// U_hat = Z1_hat - Z_start, displacement heads give Z1_hat = Z_start + U_hat.
JitPrediction jit_assemble(JitVariant variant, Var head_output, Var z_start);

/// Applies h_x or h_v (whichever the variant uses) to the backbone states.
JitPrediction jit_predict(Tape& tape, const ParamSet& params, JitVariant variant, Var hidden, Var z_start);

/// Mean squared error of the endpoint (x space) or of the displacement
/// against U* = Z1 - Z_start (v space).
Var jit_loss(const JitPrediction& pred, Var z_start, Var z1, bool x_space);

/// (1 - t) Z0 + t Z1 for a single t in [0, 1].
Tensor interpolate(const Tensor& z0, const Tensor& z1, double t);
/// Same blend with one t per set of `cells_per_set` rows.
Var interpolate(Tape& tape, Var z0, Var z1, const std::vector<double>& t, Index cells_per_set);

/// Start state of the transport path under the chosen prior.
Var sample_start(Tape& tape, Var z0, const PriorMode& prior, std::mt19937_64& rng);
Tensor sample_start(const Tensor& z0, const PriorMode& prior, std::mt19937_64& rng);

}  // namespace vcell::transport
