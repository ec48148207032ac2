#include "vcell/transport/backbone.hpp"

#include <cmath>

#include "vcell/ndmath/layers.hpp"

namespace vcell::transport {

void init_backbone(ParamSet& params, const TransportConfig& cfg, Index latent_width, std::mt19937_64& rng) {
  layers::add_mlp(params, "bb.time", 2 * cfg.time_frequencies, cfg.hidden, latent_width, rng);
  for (Index l = 0; l < cfg.blocks; ++l) {
    const std::string p = "bb.block" + std::to_string(l);
    layers::add_rmsnorm(params, p + ".norm", latent_width);
    layers::add_self_attention(params, p + ".attn", latent_width, rng);
    layers::add_mlp(params, p + ".ff", latent_width, cfg.hidden, latent_width, rng);
  }
}

Tensor time_features(const std::vector<double>& t, Index frequencies) {
  Tensor f(static_cast<Index>(t.size()), 2 * frequencies);
  for (Index k = 0; k < frequencies; ++k) {
    const double freq = std::pow(10.0, 4.0 * static_cast<double>(k) / static_cast<double>(frequencies - 1));
    for (Index b = 0; b < f.rows(); ++b) {
      const double arg = t[static_cast<std::size_t>(b)] * freq;
      f(b, k) = std::sin(arg);
      f(b, frequencies + k) = std::cos(arg);
    }
  }
  return f;
}

Var time_embedding(Tape& tape, const ParamSet& params, const TransportConfig& cfg, const std::vector<double>& t) {
  return layers::mlp(tape, params, "bb.time", tape.constant(time_features(t, cfg.time_frequencies)));
}

std::vector<Index> joint_sequence_index(Index sets, Index cells) {
  // Source rows: vstack(cells (sets*cells rows), condition (sets rows)).
  std::vector<Index> idx;
  idx.reserve(static_cast<std::size_t>(sets * (cells + 1)));
  for (Index b = 0; b < sets; ++b) {
    for (Index i = 0; i < cells; ++i) idx.push_back(b * cells + i);
    idx.push_back(sets * cells + b);
  }
  return idx;
}

std::vector<Index> cell_rows_of_joint(Index sets, Index cells) {
  std::vector<Index> idx;
  idx.reserve(static_cast<std::size_t>(sets * cells));
  for (Index b = 0; b < sets; ++b) {
    for (Index i = 0; i < cells; ++i) idx.push_back(b * (cells + 1) + i);
  }
  return idx;
}

Var inject_block(Tape& tape, const ParamSet& params, const std::string& prefix, Var cells, Var condition,
                 Var time_per_cell, Index cells_per_set, Index heads, bool mask_condition) {
  const Index sets = condition.rows();
  if (cells.rows() != sets * cells_per_set || cells.cols() != condition.cols()) {
    throw DimensionError("inject_block: cell tokens and condition tokens do not line up");
  }
  Var joint =
      ad::gather_rows(ad::vstack(ad::add(cells, time_per_cell), condition), joint_sequence_index(sets, cells_per_set));
  Var normed = layers::rmsnorm(tape, params, prefix + ".norm", joint);
  AttentionLayout layout;
  layout.key_group = cells_per_set + 1;
  layout.heads = heads;
  layout.mask_last_key = mask_condition;
  Var updated = ad::add(ad::add(joint, layers::self_attention(tape, params, prefix + ".attn", normed, layout)),
                        layers::mlp(tape, params, prefix + ".ff", normed));
  return ad::gather_rows(updated, cell_rows_of_joint(sets, cells_per_set));
}

Var backbone(Tape& tape, const ParamSet& params, const TransportConfig& cfg, Var z_in, Index cells_per_set,
             const std::vector<double>& t, Var condition) {
  const Index sets = condition.rows();
  if (static_cast<Index>(t.size()) != sets) {
    throw DimensionError("backbone: need one interpolation time per set");
  }
  Var time_cells = ad::gather_rows(time_embedding(tape, params, cfg, t), repeat_each(sets, cells_per_set));
  Var h = z_in;
  for (Index l = 0; l < cfg.blocks; ++l) {
    h = inject_block(tape, params, "bb.block" + std::to_string(l), h, condition, time_cells, cells_per_set,
                     cfg.heads);
  }
  return h;
}

}  // namespace vcell::transport
