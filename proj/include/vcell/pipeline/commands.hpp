#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vcell/celleval/evaluate.hpp"
#include "vcell/datastore/shard_io.hpp"
#include "vcell/pipeline/config.hpp"
#include "vcell/pipeline/train.hpp"

namespace vcell::pipeline {

namespace fs = std::filesystem;

/// Raw synthetic counts plus truth.csv.
datastore::ShardManifest cmd_synth(const RunConfig& cfg, const fs::path& out);

/// Normalization, log1p, scaling and HVG selection of a raw dataset.
datastore::ShardManifest cmd_prepare(const RunConfig& cfg, const fs::path& raw, const fs::path& out);

/// Trains on cfg.data.dataset and writes config.ini, run.json and checkpoint/ into `out`.
RunRecord cmd_train(const RunConfig& cfg, const fs::path& out, const EpochCallback& on_epoch = {});

/// Loads the model of a run directory (config.ini + checkpoint/).
transport::Model load_run(const fs::path& run_dir, const datastore::Dataset& ds);

enum class Baseline { None, ControlCopy, TrainMean };
Baseline parse_baseline(const std::string& s);

struct GenerateRequest {
  /// "cell_type/perturbation" (every batch) or "cell_type/perturbation/batch"; empty means the run's holdout.
  std::vector<std::string> conditions;
  std::uint64_t seed = 0;
  Index steps = 0;
  Baseline baseline = Baseline::None;
};

/// Condition strings to group keys present in `ds`.
std::vector<datastore::GroupKey> resolve_conditions(const datastore::Dataset& ds,
                                                    const std::vector<std::string>& conditions);

/// The first n control cells of a (cell type, batch), wrapping when the store is smaller.
Tensor matched_controls(const datastore::Dataset& ds, const datastore::GroupKey& key, Index n);

/// One predicted group per key with as many cells as the truth group, generated from the matched
/// controls in sets of `set_size` (the last set is padded by wrapping). The controls used are stored
/// in the result's control store.
datastore::Dataset predict_groups(const transport::Model& model, const datastore::Dataset& ds,
                                  const std::vector<datastore::GroupKey>& keys, Index set_size,
                                  const transport::GenerateOptions& opts = {});

/// Control copy (pred = controls) or train mean (controls + mean training delta of the same cell type and batch).
datastore::Dataset baseline_groups(Baseline kind, const datastore::Dataset& ds,
                                   const std::vector<datastore::GroupKey>& keys,
                                   const std::vector<datastore::GroupKey>& train_keys);

/// Writes predicted shards into `out`.
datastore::ShardManifest cmd_generate(const fs::path& run_dir, const fs::path& data_dir, const fs::path& out,
                                      const GenerateRequest& req);

/// One evaluation group per (cell type, perturbation) of `pred`, batches concatenated.
std::vector<celleval::PerturbationGroup> assemble_groups(const datastore::Dataset& pred,
                                                         const datastore::Dataset& truth,
                                                         const datastore::Dataset& ctrl);

/// report.json and report.csv in `out`.
celleval::MetricReport cmd_eval(const fs::path& pred, const fs::path& truth, const fs::path& ctrl,
                                const fs::path& out, const celleval::EvalConfig& cfg);

struct ReportRow {
  std::string run;
  std::string variant;
  std::string pooling;
  std::string prior;
  celleval::MetricValues mean{};
};

/// Merged comparison of run directories (each holding config.ini and report.json), sorted by PDCorr
/// descending. Runs with a missing or malformed report are skipped and named in `warnings`.
std::vector<ReportRow> cmd_report(const std::vector<fs::path>& runs, const fs::path& out_csv,
                                  std::vector<std::string>* warnings = nullptr);

}  // namespace vcell::pipeline
