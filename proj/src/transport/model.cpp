#include "vcell/transport/model.hpp"

#include "vcell/setenc/encoder.hpp"
#include "vcell/setenc/losses.hpp"
#include "vcell/transport/backbone.hpp"
#include "vcell/transport/conditions.hpp"
#include "vcell/transport/jit.hpp"

namespace vcell::transport {

Model init_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Model m{cfg, {}};
  std::mt19937_64 rng(seed);
  const Index d = cfg.encoder.latent_width;
  setenc::init_autoencoder(m.params, cfg.encoder, rng);
  init_conditions(m.params, cfg.transport, d, rng);
  init_backbone(m.params, cfg.transport, d, rng);
  init_heads(m.params, cfg.transport.variant, d, rng);
  return m;
}

LossTerms joint_loss(Tape& tape, const Model& model, const TrainBatch& batch, std::mt19937_64& rng,
                     const LossWeights& weights) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> t(static_cast<std::size_t>(batch.x0.sets));
  for (double& v : t) v = unit(rng);
  return joint_loss(tape, model, batch, t, rng, weights);
}

LossTerms joint_loss(Tape& tape, const Model& model, const TrainBatch& batch, const std::vector<double>& t,
                     std::mt19937_64& rng, const LossWeights& weights) {
  const ModelConfig& cfg = model.config;
  const ParamSet& p = model.params;
  if (batch.x0.sets != batch.x1.sets || batch.x0.items != batch.x1.items ||
      batch.conditions.size() != batch.x0.sets) {
    throw DimensionError("joint_loss: control, perturbed and condition batches disagree in shape");
  }
  const Index cells = batch.x0.items;

  Var z0 = setenc::encode(tape, p, cfg.encoder, batch.x0);
  Var z1 = setenc::encode(tape, p, cfg.encoder, batch.x1);
  // reconstruction terms are measured in standardized gene units
  Var x0_hat = setenc::decode_standardized(tape, p, cfg.encoder, z0);
  Var x1_hat = setenc::decode_standardized(tape, p, cfg.encoder, z1);
  auto ae = setenc::ae_loss(tape, setenc::standardize(p, batch.x0), setenc::standardize(p, batch.x1), x0_hat, x1_hat,
                            cfg.encoder.lambda_mmd, cfg.encoder.bandwidths);

  Var z_start = sample_start(tape, z0, cfg.transport.prior, rng);
  Var z_t = interpolate(tape, z_start, z1, t, cells);
  Var cond = condition_token(tape, p, cfg.transport, batch.conditions);
  Var hidden = backbone(tape, p, cfg.transport, z_t, cells, t, cond);
  JitPrediction pred = jit_predict(tape, p, cfg.transport.variant, hidden, z_start);
  Var flow = jit_loss(pred, z_start, z1, endpoint_loss(cfg.transport.variant));

  Var total = ad::add(ad::scale(ae.total, weights.ae), ad::scale(flow, weights.flow * cfg.lambda_flow));
  return {ae.mse, ae.mmd, ae.total, flow, total};
}

LatentBatch predict_latent(const Model& model, const CellSetBatch& x0, const ConditionBatch& cond,
                           const GenerateOptions& opts) {
  const ModelConfig& cfg = model.config;
  if (!model.params.all_finite()) {
    throw NumericError("generate: model parameters contain non-finite values");
  }
  if (cond.size() != x0.sets) {
    throw DimensionError("generate: one condition triple per control set is required");
  }
  const Index steps = opts.steps > 0 ? opts.steps : cfg.transport.euler_steps;
  std::mt19937_64 rng(opts.seed);

  Tape tape;
  Var z0 = setenc::encode(tape, model.params, cfg.encoder, x0);
  Var z = sample_start(tape, z0, cfg.transport.prior, rng);
  Var c = condition_token(tape, model.params, cfg.transport, cond);
  const auto sets = static_cast<std::size_t>(x0.sets);
  if (predicts_endpoint(cfg.transport.variant)) {
    Var h = backbone(tape, model.params, cfg.transport, z, x0.items, std::vector<double>(sets, 0.0), c);
    z = jit_predict(tape, model.params, cfg.transport.variant, h, z).endpoint;
  } else {
    for (Index s = 0; s < steps; ++s) {
      const double t = static_cast<double>(s) / static_cast<double>(steps);
      Var h = backbone(tape, model.params, cfg.transport, z, x0.items, std::vector<double>(sets, t), c);
      Var u = jit_predict(tape, model.params, cfg.transport.variant, h, z).displacement;
      z = ad::add(z, ad::scale(u, 1.0 / static_cast<double>(steps)));
    }
  }
  if (!z.value().allFinite()) {
    throw NumericError("generate: predicted latent state is not finite");
  }
  return LatentBatch(x0.sets, x0.items, z.value());
}

CellSetBatch generate(const Model& model, const CellSetBatch& x0, const ConditionBatch& cond,
                      const GenerateOptions& opts) {
  return setenc::decode(model.params, model.config.encoder, predict_latent(model, x0, cond, opts));
}

}  // namespace vcell::transport
