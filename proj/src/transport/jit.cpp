#include "vcell/transport/jit.hpp"

#include "vcell/ndmath/layers.hpp"

namespace vcell::transport {

void init_heads(ParamSet& params, JitVariant variant, Index latent_width, std::mt19937_64& rng) {
  layers::add_linear(params, predicts_endpoint(variant) ? "head.x" : "head.v", latent_width, latent_width, rng);
}

JitPrediction jit_assemble(JitVariant variant, Var head_output, Var z_start) {
  if (predicts_endpoint(variant)) {
    return {head_output, ad::sub(head_output, z_start)};
  }
  return {ad::add(z_start, head_output), head_output};
}

JitPrediction jit_predict(Tape& tape, const ParamSet& params, JitVariant variant, Var hidden, Var z_start) {
  const char* head = predicts_endpoint(variant) ? "head.x" : "head.v";
  return jit_assemble(variant, layers::linear(tape, params, head, hidden), z_start);
}

Var jit_loss(const JitPrediction& pred, Var z_start, Var z1, bool x_space) {
  if (x_space) {
    return ad::mean_square(ad::sub(pred.endpoint, z1));
  }
  return ad::mean_square(ad::sub(pred.displacement, ad::sub(z1, z_start)));
}

Tensor interpolate(const Tensor& z0, const Tensor& z1, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw ArgumentError("interpolate: t must lie in [0, 1]");
  }
  require_same_shape(z0, z1, "interpolate");
  if (t == 0.0) return z0;
  if (t == 1.0) return z1;
  return (1.0 - t) * z0 + t * z1;
}

Var interpolate(Tape& tape, Var z0, Var z1, const std::vector<double>& t, Index cells_per_set) {
  require_same_shape(z0.value(), z1.value(), "interpolate");
  if (static_cast<Index>(t.size()) * cells_per_set != z0.rows()) {
    throw DimensionError("interpolate: need one t per set");
  }
  Tensor w1(z0.rows(), z0.cols());
  Tensor w0(z0.rows(), z0.cols());
  for (std::size_t b = 0; b < t.size(); ++b) {
    if (!(t[b] >= 0.0 && t[b] <= 1.0)) {
      throw ArgumentError("interpolate: t must lie in [0, 1]");
    }
    w1.middleRows(static_cast<Index>(b) * cells_per_set, cells_per_set).setConstant(t[b]);
    w0.middleRows(static_cast<Index>(b) * cells_per_set, cells_per_set).setConstant(1.0 - t[b]);
  }
  return ad::add(ad::hadamard(z0, tape.constant(std::move(w0))), ad::hadamard(z1, tape.constant(std::move(w1))));
}

Var sample_start(Tape& tape, Var z0, const PriorMode& prior, std::mt19937_64& rng) {
  prior.validate();
  using Kind = PriorMode::Kind;
  Var start = z0;
  if (prior.kind == Kind::GaussianMix || prior.kind == Kind::MaskedGaussianMix) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor noise(z0.rows(), z0.cols());
    for (Index r = 0; r < noise.rows(); ++r)
      for (Index c = 0; c < noise.cols(); ++c) noise(r, c) = normal(rng);
    start = ad::add(tape.constant(std::move(noise)), ad::scale(z0, prior.mix));
  }
  if ((prior.kind == Kind::MaskedControl || prior.kind == Kind::MaskedGaussianMix) && prior.mask_rate > 0.0) {
    std::bernoulli_distribution drop(prior.mask_rate);
    Tensor keep(z0.rows(), z0.cols());
    for (Index r = 0; r < keep.rows(); ++r)
      for (Index c = 0; c < keep.cols(); ++c) keep(r, c) = drop(rng) ? 0.0 : 1.0;
    start = ad::hadamard(start, tape.constant(std::move(keep)));
  }
  return start;
}

Tensor sample_start(const Tensor& z0, const PriorMode& prior, std::mt19937_64& rng) {
  Tape tape;
  return sample_start(tape, tape.constant(z0), prior, rng).value();
}

}  // namespace vcell::transport
