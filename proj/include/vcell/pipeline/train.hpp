#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vcell/datastore/dataset.hpp"
#include "vcell/pipeline/config.hpp"
#include "vcell/transport/model.hpp"

namespace vcell::pipeline {

struct EpochRecord {
  Index epoch = 0;
  std::string phase;  // "joint", "ae" or "transport"
  double mse = 0.0;
  double mmd = 0.0;
  double flow = 0.0;
  double total = 0.0;
  double seconds = 0.0;
};

struct RunRecord {
  std::string config;
  std::vector<EpochRecord> epochs;
  std::string checkpoint;
};

std::string record_json(const RunRecord& r);

/// Every batch of each held-out "cell_type/perturbation" pair; LookupError for unknown labels.
std::vector<datastore::GroupKey> holdout_keys(const datastore::Dataset& ds, const std::vector<std::string>& holdout);
std::vector<datastore::GroupKey> training_keys(const datastore::Dataset& ds, const std::vector<std::string>& holdout);

/// Model config with the gene count and condition vocabulary of the dataset.
transport::ModelConfig resolve_model(const RunConfig& cfg, const datastore::Dataset& ds);

/// Per-gene mean and standard deviation over controls and the given groups.
void fit_normalization(ParamSet& params, const datastore::Dataset& ds, const std::vector<datastore::GroupKey>& keys);

/// Stacks examples into one batch of B sets.
transport::TrainBatch make_batch(const std::vector<datastore::TrainExample>& examples);

struct TrainResult {
  transport::Model model;
  RunRecord record;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Adam over L_AE + lambda_flow * L_flow (joint), or AE epochs followed by transport epochs with
/// the autoencoder frozen (stage-wise). Throws NumericError naming the first non-finite term.
TrainResult train_model(const RunConfig& cfg, const datastore::Dataset& ds, const EpochCallback& on_epoch = {});

}  // namespace vcell::pipeline
