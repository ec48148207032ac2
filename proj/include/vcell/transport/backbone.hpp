#pragma once

#include <random>
#include <vector>

#include "vcell/ndmath/params.hpp"
#include "vcell/ndmath/tape.hpp"
#include "vcell/transport/types.hpp"

namespace vcell::transport {

void init_backbone(ParamSet& params, const TransportConfig& cfg, Index latent_width, std::mt19937_64& rng);

/// Sinusoidal features with frequencies spaced geometrically from 1 to 1e4: B x 2F.
Tensor time_features(const std::vector<double>& t, Index frequencies);

/// Per-set time embedding, B x d.
Var time_embedding(Tape& tape, const ParamSet& params, const TransportConfig& cfg, const std::vector<double>& t);

/// Row order of the joint sequence: for set b, its N cell rows followed by its condition row.
std::vector<Index> joint_sequence_index(Index sets, Index cells);
/// Positions of the cell rows inside the joint sequence.
std::vector<Index> cell_rows_of_joint(Index sets, Index cells);

/// One conditioning block: appends the condition token to each set's cells (with the
/// time embedding added to cells only), applies h + attn(norm(h)) + mlp(norm(h)) over
/// the N+1 tokens, and keeps the N cell rows. No positional information on the cell axis.
Var inject_block(Tape& tape, const ParamSet& params, const std::string& prefix, Var cells, Var condition,
                 Var time_per_cell, Index cells_per_set, Index heads, bool mask_condition = false);

/// g(Z, t, C): the stacked conditioning blocks. Output has the shape of z_in.
Var backbone(Tape& tape, const ParamSet& params, const TransportConfig& cfg, Var z_in, Index cells_per_set,
             const std::vector<double>& t, Var condition);

}  // namespace vcell::transport
