#include "vcell/pipeline/commands.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "vcell/celleval/report.hpp"
#include "vcell/datastore/preprocess.hpp"
#include "vcell/datastore/sampler.hpp"
#include "vcell/datastore/shard_io.hpp"
#include "vcell/datastore/synth.hpp"
#include "vcell/pipeline/checkpoint.hpp"

namespace vcell::pipeline {

using datastore::ControlKey;
using datastore::Dataset;
using datastore::GroupKey;

datastore::ShardManifest cmd_synth(const RunConfig& cfg, const fs::path& out) {
  const auto result = datastore::synth_generate(cfg.synth);
  auto manifest = datastore::write_dataset(result.counts, out);
  datastore::write_file_atomic(out / "truth.csv", datastore::truth_csv(result));
  return manifest;
}

datastore::ShardManifest cmd_prepare(const RunConfig& cfg, const fs::path& raw, const fs::path& out) {
  return datastore::write_dataset(datastore::prepare_dataset(datastore::read_dataset(raw), cfg.prepare), out);
}

RunRecord cmd_train(const RunConfig& cfg, const fs::path& out, const EpochCallback& on_epoch) {
  if (cfg.data.dataset.empty()) throw ConfigError("train: data.dataset is not set");
  const Dataset ds = datastore::read_dataset(cfg.data.dataset);
  fs::create_directories(out);
  datastore::write_file_atomic(out / "config.ini", echo_config(cfg));
  TrainResult result = train_model(cfg, ds, on_epoch);
  save_checkpoint(result.model.params, out / "checkpoint");
  result.record.checkpoint = (out / "checkpoint").string();
  datastore::write_file_atomic(out / "run.json", record_json(result.record));
  return result.record;
}

transport::Model load_run(const fs::path& run_dir, const Dataset& ds) {
  const RunConfig cfg = load_config(run_dir / "config.ini");
  transport::Model model = transport::init_model(resolve_model(cfg, ds), cfg.train.seed);
  load_checkpoint(model.params, run_dir / "checkpoint");
  return model;
}

Baseline parse_baseline(const std::string& s) {
  if (s.empty() || s == "none") return Baseline::None;
  if (s == "control") return Baseline::ControlCopy;
  if (s == "trainmean") return Baseline::TrainMean;
  throw ConfigError("unknown baseline '" + s + "' (expected none, control or trainmean)");
}

std::vector<GroupKey> resolve_conditions(const Dataset& ds, const std::vector<std::string>& conditions) {
  std::vector<GroupKey> out;
  for (const auto& c : conditions) {
    std::vector<std::string> parts;
    std::stringstream in(c);
    std::string part;
    while (std::getline(in, part, '/')) parts.push_back(part);
    if (parts.size() == 3) {
      const GroupKey k = ds.key_of(parts[0], parts[1], parts[2]);
      if (!ds.groups.count(k)) throw LookupError("no cells for condition '" + c + "'");
      out.push_back(k);
    } else if (parts.size() == 2) {
      const auto keys = holdout_keys(ds, {c});
      out.insert(out.end(), keys.begin(), keys.end());
    } else {
      throw ConfigError("condition '" + c + "' is not cell_type/perturbation[/batch]");
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Tensor matched_controls(const Dataset& ds, const GroupKey& key, Index n) {
  auto it = ds.controls.find(datastore::control_key(key));
  if (it == ds.controls.end() || it->second.rows == 0) {
    throw datastore::SamplingError("no matched control cells for " + ds.describe(key));
  }
  return datastore::to_dense(datastore::select_rows(it->second, datastore::wrap_rows(it->second.rows, n)));
}

namespace {

Dataset empty_like(const Dataset& ds) {
  Dataset out;
  out.genes = ds.genes;
  out.labels = ds.labels;
  return out;
}

/// Largest control set used per (cell type, batch), so every group's controls are a prefix of it.
void record_controls(Dataset& out, const Dataset& ds, const std::vector<GroupKey>& keys) {
  std::map<ControlKey, Index> need;
  for (const auto& k : keys) {
    auto& n = need[datastore::control_key(k)];
    n = std::max<Index>(n, ds.groups.at(k).rows);
  }
  for (const auto& [ck, n] : need) {
    out.controls[ck] = datastore::to_sparse(matched_controls(ds, {ck.cell_type, 0, ck.batch}, n));
  }
}

std::uint64_t group_seed(std::uint64_t seed, const GroupKey& k) {
  std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ULL;
  for (Index v : {k.cell_type, k.perturbation, k.batch}) {
    h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

}  // namespace

Dataset predict_groups(const transport::Model& model, const Dataset& ds, const std::vector<GroupKey>& keys,
                       Index set_size, const transport::GenerateOptions& opts) {
  if (set_size < 1) throw ConfigError("generate: set size must be positive");
  if (ds.gene_count() != model.config.encoder.genes) {
    throw DataError("generate: dataset has " + std::to_string(ds.gene_count()) + " genes, model expects " +
                    std::to_string(model.config.encoder.genes));
  }
  Dataset out = empty_like(ds);
  constexpr Index kSetsPerCall = 16;
  for (const auto& key : keys) {
    auto g = ds.groups.find(key);
    if (g == ds.groups.end()) throw LookupError("generate: unknown condition " + ds.describe(key));
    const Index n = g->second.rows;
    const Tensor ctrl = matched_controls(ds, key, n);
    const Index sets = (n + set_size - 1) / set_size;
    Tensor pred(n, ds.gene_count());
    for (Index first = 0; first < sets; first += kSetsPerCall) {
      const Index count = std::min(kSetsPerCall, sets - first);
      Tensor x0(count * set_size, ds.gene_count());
      for (Index r = 0; r < x0.rows(); ++r) x0.row(r) = ctrl.row((first * set_size + r) % n);
      transport::ConditionBatch cond{std::vector<Index>(static_cast<std::size_t>(count), key.cell_type),
                                     std::vector<Index>(static_cast<std::size_t>(count), key.perturbation),
                                     std::vector<Index>(static_cast<std::size_t>(count), key.batch)};
      transport::GenerateOptions o = opts;
      o.seed = group_seed(opts.seed, key) + static_cast<std::uint64_t>(first);
      const CellSetBatch y = transport::generate(model, CellSetBatch(count, set_size, x0), cond, o);
      for (Index r = 0; r < y.values.rows(); ++r) {
        const Index cell = first * set_size + r;
        if (cell < n) pred.row(cell) = y.values.row(r);
      }
    }
    out.groups[key] = datastore::to_sparse(pred.cwiseMax(0.0));
  }
  record_controls(out, ds, keys);
  return out;
}

Dataset baseline_groups(Baseline kind, const Dataset& ds, const std::vector<GroupKey>& keys,
                        const std::vector<GroupKey>& train_keys) {
  if (kind == Baseline::None) throw ArgumentError("baseline_groups: no baseline selected");
  Dataset out = empty_like(ds);
  for (const auto& key : keys) {
    auto g = ds.groups.find(key);
    if (g == ds.groups.end()) throw LookupError("baseline: unknown condition " + ds.describe(key));
    Tensor pred = matched_controls(ds, key, g->second.rows);
    if (kind == Baseline::TrainMean) {
      const ControlKey ck = datastore::control_key(key);
      const Eigen::RowVectorXd ctrl_mean = datastore::to_dense(ds.controls.at(ck)).colwise().mean();
      Eigen::RowVectorXd delta = Eigen::RowVectorXd::Zero(ds.gene_count());
      Index used = 0;
      for (const auto& t : train_keys) {
        if (datastore::control_key(t) != ck) continue;
        delta += datastore::to_dense(ds.groups.at(t)).colwise().mean() - ctrl_mean;
        ++used;
      }
      if (used > 0) pred.rowwise() += delta / static_cast<double>(used);
    }
    out.groups[key] = datastore::to_sparse(pred.cwiseMax(0.0));
  }
  record_controls(out, ds, keys);
  return out;
}

datastore::ShardManifest cmd_generate(const fs::path& run_dir, const fs::path& data_dir, const fs::path& out,
                                      const GenerateRequest& req) {
  const RunConfig cfg = load_config(run_dir / "config.ini");
  const Dataset ds = datastore::read_dataset(data_dir);
  const auto keys = resolve_conditions(ds, req.conditions.empty() ? cfg.data.holdout : req.conditions);
  if (keys.empty()) throw ConfigError("generate: no conditions requested and the run has no holdout");
  Dataset pred;
  if (req.baseline != Baseline::None) {
    pred = baseline_groups(req.baseline, ds, keys, training_keys(ds, cfg.data.holdout));
  } else {
    const transport::Model model = load_run(run_dir, ds);
    pred = predict_groups(model, ds, keys, cfg.train.cells, {req.seed, req.steps});
  }
  return datastore::write_dataset(pred, out);
}

std::vector<celleval::PerturbationGroup> assemble_groups(const Dataset& pred, const Dataset& truth,
                                                         const Dataset& ctrl) {
  if (pred.genes != truth.genes || ctrl.genes != truth.genes) {
    throw DataError("eval: predicted, truth and control datasets do not share one gene universe");
  }
  if (pred.labels != truth.labels || ctrl.labels != truth.labels) {
    throw DataError("eval: datasets use different condition label tables");
  }
  std::map<std::pair<Index, Index>, std::vector<GroupKey>> by_pair;
  for (const auto& [k, b] : pred.groups) by_pair[{k.cell_type, k.perturbation}].push_back(k);
  std::vector<celleval::PerturbationGroup> groups;
  for (const auto& [pair, keys] : by_pair) {
    std::vector<Tensor> p, t, c;
    Index rows = 0;
    for (const auto& k : keys) {
      auto tg = truth.groups.find(k);
      if (tg == truth.groups.end()) throw DataError("eval: truth has no cells for " + truth.describe(k));
      const auto& pg = pred.groups.at(k);
      if (pg.rows != tg->second.rows) {
        throw DataError("eval: " + truth.describe(k) + " has " + std::to_string(pg.rows) + " predicted but " +
                        std::to_string(tg->second.rows) + " observed cells");
      }
      p.push_back(datastore::to_dense(pg));
      t.push_back(datastore::to_dense(tg->second));
      c.push_back(matched_controls(ctrl, k, tg->second.rows));
      rows += tg->second.rows;
    }
    auto stack = [&](const std::vector<Tensor>& parts) {
      Tensor out(rows, truth.gene_count());
      Index at = 0;
      for (const auto& x : parts) {
        out.middleRows(at, x.rows()) = x;
        at += x.rows();
      }
      return out;
    };
    groups.push_back({truth.labels.cell_types[static_cast<std::size_t>(pair.first)] + "/" +
                          truth.labels.perturbations[static_cast<std::size_t>(pair.second)],
                      stack(t), stack(c), stack(p)});
  }
  return groups;
}

celleval::MetricReport cmd_eval(const fs::path& pred, const fs::path& truth, const fs::path& ctrl, const fs::path& out,
                                const celleval::EvalConfig& cfg) {
  const auto groups = assemble_groups(datastore::read_dataset(pred), datastore::read_dataset(truth),
                                      datastore::read_dataset(ctrl));
  const auto report = celleval::evaluate(groups, cfg);
  celleval::write_report(report, out / "report.json", out / "report.csv");
  return report;
}

std::vector<ReportRow> cmd_report(const std::vector<fs::path>& runs, const fs::path& out_csv,
                                  std::vector<std::string>* warnings) {
  if (runs.empty()) throw ConfigError("report: no run directories given");
  std::vector<ReportRow> rows;
  for (const auto& dir : runs) {
    try {
      const RunConfig cfg = load_config(dir / "config.ini");
      const auto report = celleval::report_from_json(datastore::read_file(dir / "report.json"));
      rows.push_back({dir.filename().string(), transport::to_string(cfg.model.transport.variant),
                      transport::to_string(cfg.model.transport.pooling),
                      transport::to_string(cfg.model.transport.prior.kind), report.mean});
    } catch (const std::exception& e) {
      if (warnings) warnings->push_back("skipping " + dir.string() + ": " + e.what());
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    const double x = std::isnan(a.mean[celleval::kPDCorr]) ? -2.0 : a.mean[celleval::kPDCorr];
    const double y = std::isnan(b.mean[celleval::kPDCorr]) ? -2.0 : b.mean[celleval::kPDCorr];
    return x > y;
  });
  std::ostringstream csv;
  csv << std::setprecision(17) << "run,variant,pooling,prior";
  for (const auto& name : celleval::column_names()) csv << ',' << name;
  csv << '\n';
  for (const auto& r : rows) {
    csv << r.run << ',' << r.variant << ',' << r.pooling << ',' << r.prior;
    for (double v : r.mean) {
      csv << ',';
      if (!std::isnan(v)) csv << v;
    }
    csv << '\n';
  }
  if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
  datastore::write_file_atomic(out_csv, csv.str());
  return rows;
}

}  // namespace vcell::pipeline
