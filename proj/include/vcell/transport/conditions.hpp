#pragma once

#include <random>

#include "vcell/ndmath/params.hpp"
#include "vcell/ndmath/tape.hpp"
#include "vcell/transport/types.hpp"

namespace vcell::transport {

void init_conditions(ParamSet& params, const TransportConfig& cfg, Index latent_width, std::mt19937_64& rng);

/// Stacked token matrix C, (3B) x d_c: rows 3b, 3b+1, 3b+2 are e_c, e_p, e_b of example b.
/// Throws LookupError for ids outside the vocabulary.
Var embed_conditions(Tape& tape, const ParamSet& params, const ConditionVocab& vocab, const ConditionBatch& ids);

/// C~ = Pi(C), (3B) x d.
Var project_conditions(Tape& tape, const ParamSet& params, Var tokens);

/// Collapses each example's three projected tokens into one summary row, B x d.
Var pool_conditions(Tape& tape, const ParamSet& params, PoolingMode mode, Var projected);

/// Pooling weights over the three tokens of each example, B x 3.
Tensor pooling_weights(const ParamSet& params, PoolingMode mode, const Tensor& projected);

/// embed -> project -> pool: the condition token injected into every block.
Var condition_token(Tape& tape, const ParamSet& params, const TransportConfig& cfg, const ConditionBatch& ids);

}  // namespace vcell::transport
