#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "vcell/ndmath/params.hpp"
#include "vcell/ndmath/tape.hpp"
#include "vcell/setenc/types.hpp"
#include "vcell/transport/types.hpp"

namespace vcell::transport {

struct Model {
  ModelConfig config;
  ParamSet params;
};

Model init_model(const ModelConfig& cfg, std::uint64_t seed);

/// Paired control/perturbed sets with their conditions.
struct TrainBatch {
  CellSetBatch x0;
  CellSetBatch x1;
  ConditionBatch conditions;
};

struct LossTerms {
  Var mse;
  Var mmd;
  Var ae;
  Var flow;
  Var total;
};

struct LossWeights {
  double ae = 1.0;
  double flow = 1.0;
};

/// L_AE + lambda_flow * L_flow for one batch. Interpolation times and prior noise
/// are drawn from rng, one t ~ U(0, 1) per set.
LossTerms joint_loss(Tape& tape, const Model& model, const TrainBatch& batch, std::mt19937_64& rng,
                     const LossWeights& weights);

/// Same loss with explicit interpolation times (tests and diagnostics).
LossTerms joint_loss(Tape& tape, const Model& model, const TrainBatch& batch, const std::vector<double>& t,
                     std::mt19937_64& rng, const LossWeights& weights);

struct GenerateOptions {
  std::uint64_t seed = 0;
  /// Overrides the configured Euler step count when positive.
  Index steps = 0;
};

/// Predicted latent endpoint for a control population.
LatentBatch predict_latent(const Model& model, const CellSetBatch& x0, const ConditionBatch& cond,
                           const GenerateOptions& opts = {});

/// Dec(Z1_hat): endpoint variants evaluate once at t = 0; displacement variants
/// take S Euler steps of size 1/S. Throws NumericError on non-finite parameters.
CellSetBatch generate(const Model& model, const CellSetBatch& x0, const ConditionBatch& cond,
                      const GenerateOptions& opts = {});

}  // namespace vcell::transport
