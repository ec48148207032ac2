#include "vcell/transport/types.hpp"

namespace vcell::transport {

std::string to_string(JitVariant v) {
  switch (v) {
    case JitVariant::XPredXLoss: return "xx";
    case JitVariant::XPredVLoss: return "xv";
    case JitVariant::VPredXLoss: return "vx";
    case JitVariant::VPredVLoss: return "vv";
  }
  return "?";
}

JitVariant parse_variant(const std::string& s) {
  if (s == "xx") return JitVariant::XPredXLoss;
  if (s == "xv") return JitVariant::XPredVLoss;
  if (s == "vx") return JitVariant::VPredXLoss;
  if (s == "vv") return JitVariant::VPredVLoss;
  throw ConfigError("unknown JiT variant '" + s + "' (expected xx, xv, vx or vv)");
}

std::string to_string(PoolingMode m) {
  switch (m) {
    case PoolingMode::Mean: return "mean";
    case PoolingMode::Token: return "token";
    case PoolingMode::Seed: return "seed";
  }
  return "?";
}

PoolingMode parse_pooling(const std::string& s) {
  if (s == "mean") return PoolingMode::Mean;
  if (s == "token") return PoolingMode::Token;
  if (s == "seed") return PoolingMode::Seed;
  throw ConfigError("unknown pooling mode '" + s + "' (expected mean, token or seed)");
}

std::string to_string(PriorMode::Kind k) {
  switch (k) {
    case PriorMode::Kind::ControlAnchored: return "control";
    case PriorMode::Kind::GaussianMix: return "gaussmix";
    case PriorMode::Kind::MaskedControl: return "maskctrl";
    case PriorMode::Kind::MaskedGaussianMix: return "maskmix";
  }
  return "?";
}

PriorMode::Kind parse_prior(const std::string& s) {
  if (s == "control") return PriorMode::Kind::ControlAnchored;
  if (s == "gaussmix") return PriorMode::Kind::GaussianMix;
  if (s == "maskctrl") return PriorMode::Kind::MaskedControl;
  if (s == "maskmix") return PriorMode::Kind::MaskedGaussianMix;
  throw ConfigError("unknown prior '" + s + "' (expected control, gaussmix, maskctrl or maskmix)");
}

void PriorMode::validate() const {
  if (!(mix >= 0.0)) throw ConfigError("prior: mix coefficient must be non-negative");
  if (!(mask_rate >= 0.0 && mask_rate <= 1.0)) throw ConfigError("prior: mask rate must lie in [0, 1]");
}

void ConditionBatch::validate(const ConditionVocab& vocab) const {
  if (perturbation.size() != cell_type.size() || batch.size() != cell_type.size()) {
    throw DimensionError("conditions: id lists have different lengths");
  }
  auto check = [](const std::vector<Index>& ids, Index limit, const char* what) {
    for (Index id : ids) {
      if (id < 0 || id >= limit) {
        throw LookupError(std::string("condition ") + what + " id " + std::to_string(id) + " outside [0, " +
                          std::to_string(limit) + ")");
      }
    }
  };
  check(cell_type, vocab.cell_types, "cell_type");
  check(perturbation, vocab.perturbations, "perturbation");
  check(batch, vocab.batches, "batch");
}

void TransportConfig::validate() const {
  if (vocab.cell_types < 1 || vocab.perturbations < 1 || vocab.batches < 1) {
    throw ConfigError("transport: condition vocabularies must be non-empty");
  }
  if (condition_width < 1 || blocks < 0 || heads < 1 || hidden < 1 || time_frequencies < 2 || euler_steps < 1) {
    throw ConfigError("transport: widths, head count and step counts must be positive");
  }
  prior.validate();
}

void ModelConfig::validate() const {
  encoder.validate();
  transport.validate();
  if (encoder.latent_width % transport.heads != 0) {
    throw ConfigError("transport: head count must divide the latent width");
  }
  if (!(lambda_flow >= 0.0)) throw ConfigError("lambda_flow must be non-negative");
}

}  // namespace vcell::transport
