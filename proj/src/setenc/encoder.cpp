#include "vcell/setenc/encoder.hpp"

#include <string>

namespace vcell::setenc {

void EncoderConfig::validate() const {
  if (genes < 1 || tokens < 1 || cell_width < 1 || phi_width < 1 || summary_width < 1 || latent_width < 1 ||
      hidden < 1 || heads < 1 || encoder_blocks < 0) {
    throw ConfigError("encoder: all widths and counts must be positive");
  }
  if (genes % tokens != 0) {
    throw ConfigError("encoder: gene token count " + std::to_string(tokens) + " does not divide " +
                      std::to_string(genes) + " genes");
  }
  if (cell_width % heads != 0) {
    throw ConfigError("encoder: head count must divide the cell embedding width");
  }
  if (!(lambda_mmd >= 0.0)) {
    throw ConfigError("encoder: lambda_mmd must be non-negative");
  }
  if (bandwidths.empty()) {
    throw ConfigError("encoder: at least one MMD bandwidth is required");
  }
  for (double s : bandwidths) {
    if (!(s > 0.0)) throw ConfigError("encoder: MMD bandwidths must be positive");
  }
}

void init_autoencoder(ParamSet& params, const EncoderConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const Index chunk = cfg.genes / cfg.tokens;
  layers::add_linear(params, "enc.embed", chunk, cfg.cell_width, rng);
  params.add("enc.pos", glorot_uniform(cfg.tokens, cfg.cell_width, rng));
  for (Index l = 0; l < cfg.encoder_blocks; ++l) {
    layers::add_prenorm_block(params, "enc.block" + std::to_string(l), cfg.cell_width, cfg.hidden, rng);
  }
  layers::add_rmsnorm(params, "enc.out_norm", cfg.cell_width);
  layers::add_mlp(params, "enc.phi", cfg.cell_width, cfg.hidden, cfg.phi_width, rng);
  layers::add_mlp(params, "enc.rho", cfg.phi_width, cfg.hidden, cfg.summary_width, rng);
  layers::add_linear(params, "enc.psi_h", cfg.cell_width, cfg.hidden, rng);
  layers::add_linear(params, "enc.psi_s", cfg.summary_width, cfg.hidden, rng, false);
  layers::add_linear(params, "enc.psi_out", cfg.hidden, cfg.latent_width, rng);
  layers::add_mlp(params, "dec.mlp", cfg.latent_width, cfg.hidden, cfg.genes, rng);
  params.add("norm.mean", Tensor::Zero(1, cfg.genes), false);
  params.add("norm.scale", Tensor::Ones(1, cfg.genes), false);
}

void set_normalization(ParamSet& params, const RowVector<double>& mean, const RowVector<double>& scale) {
  if ((scale.array() <= 0.0).any()) {
    throw ArgumentError("set_normalization: scales must be positive");
  }
  params.set("norm.mean", Tensor(mean));
  params.set("norm.scale", Tensor(scale));
}

Tensor tokenize(const ParamSet& params, const EncoderConfig& cfg, const CellSetBatch& x) {
  cfg.validate();
  if (x.width() != cfg.genes) {
    throw DimensionError("encode: expected " + std::to_string(cfg.genes) + " genes, got " + std::to_string(x.width()));
  }
  const Tensor& mean = params.at("norm.mean");
  const Tensor& scale = params.at("norm.scale");
  const Index chunk = cfg.genes / cfg.tokens;
  const Index cells = x.values.rows();
  Tensor tokens(cells * cfg.tokens, chunk);
  for (Index r = 0; r < cells; ++r) {
    for (Index t = 0; t < cfg.tokens; ++t) {
      for (Index c = 0; c < chunk; ++c) {
        const Index g = t * chunk + c;
        tokens(r * cfg.tokens + t, c) = (x.values(r, g) - mean(0, g)) / scale(0, g);
      }
    }
  }
  return tokens;
}

Var encode_cells(Tape& tape, const ParamSet& params, const EncoderConfig& cfg, const CellSetBatch& x) {
  Var tokens = tape.constant(tokenize(params, cfg, x));
  Var e = layers::linear(tape, params, "enc.embed", tokens);
  e = ad::add(e, ad::gather_rows(tape.param(params, "enc.pos"), tile_index(e.rows(), cfg.tokens)));
  AttentionLayout layout;
  layout.key_group = cfg.tokens;
  layout.heads = cfg.heads;
  for (Index l = 0; l < cfg.encoder_blocks; ++l) {
    e = layers::prenorm_block(tape, params, "enc.block" + std::to_string(l), e, layout);
  }
  return layers::rmsnorm(tape, params, "enc.out_norm", ad::group_mean(e, cfg.tokens));
}

Var aggregate(Tape& tape, const ParamSet& params, Var h, Index cells) {
  return deepsets_pool(
      h, cells, [&](Var v) { return layers::mlp(tape, params, "enc.phi", v); },
      [&](Var v) { return layers::mlp(tape, params, "enc.rho", v); });
}

Var fuse(Tape& tape, const ParamSet& params, Var h, Var summary, Index cells) {
  if (h.rows() != summary.rows() * cells) {
    throw DimensionError("fuse: summary count does not match the number of sets");
  }
  Var s_cells = ad::gather_rows(summary, repeat_each(summary.rows(), cells));
  Var u = ad::add(layers::linear(tape, params, "enc.psi_h", h), layers::linear(tape, params, "enc.psi_s", s_cells));
  return layers::linear(tape, params, "enc.psi_out", ad::silu(u));
}

Var encode(Tape& tape, const ParamSet& params, const EncoderConfig& cfg, const CellSetBatch& x) {
  Var h = encode_cells(tape, params, cfg, x);
  Var s = aggregate(tape, params, h, x.items);
  return fuse(tape, params, h, s, x.items);
}

Var decode_standardized(Tape& tape, const ParamSet& params, const EncoderConfig& cfg, Var z) {
  if (z.cols() != cfg.latent_width) {
    throw DimensionError("decode: latent width " + std::to_string(z.cols()) + " does not match decoder input " +
                         std::to_string(cfg.latent_width));
  }
  return layers::mlp(tape, params, "dec.mlp", z);
}

Var decode(Tape& tape, const ParamSet& params, const EncoderConfig& cfg, Var z) {
  Var y = decode_standardized(tape, params, cfg, z);
  const Index rows = y.rows();
  Var scale = tape.constant(params.at("norm.scale").replicate(rows, 1));
  return ad::add_row(ad::hadamard(y, scale), tape.param(params, "norm.mean"));
}

CellSetBatch standardize(const ParamSet& params, const CellSetBatch& x) {
  const Tensor& mean = params.at("norm.mean");
  const Tensor& scale = params.at("norm.scale");
  if (x.width() != mean.cols()) throw DimensionError("standardize: gene count mismatch");
  Tensor out = (x.values.rowwise() - mean.row(0)).array().rowwise() / scale.row(0).array();
  return CellSetBatch(x.sets, x.items, std::move(out));
}

LatentBatch encode(const ParamSet& params, const EncoderConfig& cfg, const CellSetBatch& x) {
  Tape tape;
  Var z = encode(tape, params, cfg, x);
  return LatentBatch(x.sets, x.items, z.value());
}

CellSetBatch decode(const ParamSet& params, const EncoderConfig& cfg, const LatentBatch& z) {
  Tape tape;
  Var x = decode(tape, params, cfg, tape.constant(z.values));
  return CellSetBatch(z.sets, z.items, x.value());
}

}  // namespace vcell::setenc
