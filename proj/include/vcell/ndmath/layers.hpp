#pragma once

#include <random>
#include <string>

#include "vcell/ndmath/params.hpp"
#include "vcell/ndmath/tape.hpp"

// Small building blocks shared by the encoder and the transport backbone.
// Parameters live in a ParamSet under "<prefix>.<part>" names.
namespace vcell::layers {

void add_linear(ParamSet& params, const std::string& prefix, Index in, Index out, std::mt19937_64& rng,
                bool bias = true);
Var linear(Tape& tape, const ParamSet& params, const std::string& prefix, Var x);

/// fc2(silu(fc1(x))): two linear maps with sigmoid-weighted gating in between.
void add_mlp(ParamSet& params, const std::string& prefix, Index in, Index hidden, Index out, std::mt19937_64& rng);
Var mlp(Tape& tape, const ParamSet& params, const std::string& prefix, Var x);

void add_rmsnorm(ParamSet& params, const std::string& prefix, Index width);
Var rmsnorm(Tape& tape, const ParamSet& params, const std::string& prefix, Var x, double eps = 1e-6);

void add_self_attention(ParamSet& params, const std::string& prefix, Index width, std::mt19937_64& rng);
/// Grouped self-attention: every group of layout.key_group rows attends within itself.
Var self_attention(Tape& tape, const ParamSet& params, const std::string& prefix, Var x, AttentionLayout layout);

/// Pre-norm block: x += attn(norm1(x)); x += mlp(norm2(x)).
void add_prenorm_block(ParamSet& params, const std::string& prefix, Index width, Index hidden, std::mt19937_64& rng);
Var prenorm_block(Tape& tape, const ParamSet& params, const std::string& prefix, Var x, const AttentionLayout& layout);

}  // namespace vcell::layers
