#pragma once

#include <string>
#include <vector>

#include "vcell/ndmath/tensor.hpp"
#include "vcell/setenc/encoder.hpp"

namespace vcell::transport {

/// Prediction target (endpoint x or displacement v) and loss space.
enum class JitVariant { XPredXLoss, XPredVLoss, VPredXLoss, VPredVLoss };

constexpr bool predicts_endpoint(JitVariant v) { return v == JitVariant::XPredXLoss || v == JitVariant::XPredVLoss; }
constexpr bool endpoint_loss(JitVariant v) { return v == JitVariant::XPredXLoss || v == JitVariant::VPredXLoss; }

/// "xx", "xv", "vx", "vv".
std::string to_string(JitVariant v);
JitVariant parse_variant(const std::string& s);

enum class PoolingMode { Mean, Token, Seed };
std::string to_string(PoolingMode m);
PoolingMode parse_pooling(const std::string& s);

struct PriorMode {
  enum class Kind { ControlAnchored, GaussianMix, MaskedControl, MaskedGaussianMix };
  Kind kind = Kind::ControlAnchored;
  double mix = 0.5;
  double mask_rate = 0.15;

  void validate() const;
};
/// "control", "gaussmix", "maskctrl", "maskmix".
std::string to_string(PriorMode::Kind k);
PriorMode::Kind parse_prior(const std::string& s);

struct ConditionVocab {
  Index cell_types = 1;
  Index perturbations = 1;
  Index batches = 1;
};

/// Per-example (cell type, perturbation, batch) ids.
struct ConditionBatch {
  std::vector<Index> cell_type;
  std::vector<Index> perturbation;
  std::vector<Index> batch;

  Index size() const { return static_cast<Index>(cell_type.size()); }
  void validate(const ConditionVocab& vocab) const;
};

struct TransportConfig {
  ConditionVocab vocab;
  Index condition_width = 8;  // d_c
  Index blocks = 4;
  Index heads = 1;
  Index hidden = 32;
  Index time_frequencies = 16;
  PoolingMode pooling = PoolingMode::Seed;
  JitVariant variant = JitVariant::XPredXLoss;
  PriorMode prior;
  /// Euler steps for displacement-predicting variants at generation time.
  Index euler_steps = 1;

  void validate() const;
};

struct ModelConfig {
  setenc::EncoderConfig encoder;
  TransportConfig transport;
  double lambda_flow = 1.0;

  void validate() const;
};

}  // namespace vcell::transport
