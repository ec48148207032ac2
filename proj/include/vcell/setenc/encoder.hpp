#pragma once

#include <random>
#include <vector>

#include "vcell/ndmath/layers.hpp"
#include "vcell/ndmath/params.hpp"
#include "vcell/ndmath/tape.hpp"
#include "vcell/setenc/types.hpp"

namespace vcell::setenc {

struct EncoderConfig {
  Index genes = 32;
  /// Gene tokens per cell; must divide genes.
  Index tokens = 4;
  Index cell_width = 16;     // d_h
  Index phi_width = 16;      // d_phi
  Index summary_width = 16;  // d_s
  Index latent_width = 8;    // d
  Index encoder_blocks = 2;
  Index heads = 1;
  Index hidden = 32;
  double lambda_mmd = 1.0;
  std::vector<double> bandwidths{1.0, 2.0, 4.0, 8.0};

  void validate() const;
};

/// Registers encoder and decoder weights, plus per-gene normalization
/// buffers (identity until set_normalization is called).
void init_autoencoder(ParamSet& params, const EncoderConfig& cfg, std::mt19937_64& rng);

/// Stores per-gene centering and scaling applied before encoding and undone after decoding.
void set_normalization(ParamSet& params, const RowVector<double>& mean, const RowVector<double>& scale);

/// Splits every cell's standardized G-vector into T contiguous chunks: (B*N*T) x (G/T).
Tensor tokenize(const ParamSet& params, const EncoderConfig& cfg, const CellSetBatch& x);

/// Shared gene-token attention stack applied to every cell independently: (B*N) x d_h.
Var encode_cells(Tape& tape, const ParamSet& params, const EncoderConfig& cfg, const CellSetBatch& x);

/// rho(mean_i phi(h_i)) over each group of `cells` consecutive rows.
template <typename Phi, typename Rho>
Var deepsets_pool(Var h, Index cells, Phi&& phi, Rho&& rho) {
  return rho(ad::group_mean(phi(h), cells));
}

/// Permutation-invariant set summary, B x d_s.
Var aggregate(Tape& tape, const ParamSet& params, Var h, Index cells);

/// z_i = psi(h_i, s): the shared summary of each set is fed to each of its cells.
Var fuse(Tape& tape, const ParamSet& params, Var h, Var summary, Index cells);

/// encode_cells -> aggregate -> fuse, (B*N) x d.
Var encode(Tape& tape, const ParamSet& params, const EncoderConfig& cfg, const CellSetBatch& x);

/// Decoder output before the per-gene scale and mean are restored.
Var decode_standardized(Tape& tape, const ParamSet& params, const EncoderConfig& cfg, Var z);

/// (x - mean) / scale with the stored normalization buffers.
CellSetBatch standardize(const ParamSet& params, const CellSetBatch& x);

/// Cell-wise map back to expression space, (B*N) x G.
Var decode(Tape& tape, const ParamSet& params, const EncoderConfig& cfg, Var z);

LatentBatch encode(const ParamSet& params, const EncoderConfig& cfg, const CellSetBatch& x);
CellSetBatch decode(const ParamSet& params, const EncoderConfig& cfg, const LatentBatch& z);

}  // namespace vcell::setenc
