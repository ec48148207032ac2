#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vcell/celleval/evaluate.hpp"
#include "vcell/datastore/preprocess.hpp"
#include "vcell/datastore/sampler.hpp"
#include "vcell/datastore/synth.hpp"
#include "vcell/ndmath/adam.hpp"
#include "vcell/transport/types.hpp"

namespace vcell::pipeline {

enum class TrainMode { Joint, Stagewise };
std::string to_string(TrainMode m);
TrainMode parse_mode(const std::string& s);

struct DataConfig {
  /// Prepared dataset directory.
  std::string dataset;
  std::string out = "run";
  /// Held-out "cell_type/perturbation" pairs, excluded from training.
  std::vector<std::string> holdout;
  datastore::Strategy strategy = datastore::Strategy::Proportional;
};

struct TrainConfig {
  TrainMode mode = TrainMode::Joint;
  Index epochs = 100;
  Index steps_per_epoch = 50;
  /// Stage-wise only: epochs of autoencoder training before the transport epochs.
  Index ae_epochs = 40;
  Index sets = 8;    // B
  Index cells = 32;  // N
  std::uint64_t seed = 0;
  AdamConfig adam;
};

struct RunConfig {
  DataConfig data;
  datastore::SynthConfig synth;
  datastore::PrepareConfig prepare;
  /// Gene count and vocabulary are filled from the dataset at train time.
  transport::ModelConfig model;
  TrainConfig train;
  celleval::EvalConfig eval;

  void validate() const;
};

RunConfig default_config();

/// Sectioned INI text. Unknown keys are a ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Fully resolved INI text; parse_config(echo_config(c)) == c.
std::string echo_config(const RunConfig& cfg);

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace vcell::pipeline
