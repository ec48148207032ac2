#include "vcell/pipeline/train.hpp"

#include <chrono>
#include <cmath>
#include <set>

#include "json.hpp"
#include "vcell/datastore/sampler.hpp"
#include "vcell/ndmath/adam.hpp"

namespace vcell::pipeline {

using datastore::Dataset;
using datastore::GroupKey;

std::string record_json(const RunRecord& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"phase", e.phase},
                      {"L_MSE", e.mse},
                      {"L_MMD", e.mmd},
                      {"L_flow", e.flow},
                      {"total", e.total},
                      {"seconds", e.seconds}});
  }
  return nlohmann::json{{"config", r.config}, {"epochs", epochs}, {"checkpoint", r.checkpoint}}.dump(1);
}

std::vector<GroupKey> holdout_keys(const Dataset& ds, const std::vector<std::string>& holdout) {
  std::vector<GroupKey> out;
  for (const auto& h : holdout) {
    const auto slash = h.find('/');
    if (slash == std::string::npos) throw ConfigError("holdout entry '" + h + "' is not cell_type/perturbation");
    const std::string ct = h.substr(0, slash), pert = h.substr(slash + 1);
    bool any = false;
    for (const auto& batch : ds.labels.batches) {
      const GroupKey k = ds.key_of(ct, pert, batch);
      if (ds.groups.count(k)) {
        out.push_back(k);
        any = true;
      }
    }
    if (!any) throw LookupError("holdout '" + h + "' has no cells in the dataset");
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<GroupKey> training_keys(const Dataset& ds, const std::vector<std::string>& holdout) {
  const auto held = holdout_keys(ds, holdout);
  const std::set<GroupKey> skip(held.begin(), held.end());
  std::vector<GroupKey> out;
  for (const auto& [k, b] : ds.groups) {
    if (!skip.count(k) && b.rows > 0) out.push_back(k);
  }
  if (out.empty()) throw DataError("no training groups left after holdout");
  return out;
}

transport::ModelConfig resolve_model(const RunConfig& cfg, const Dataset& ds) {
  transport::ModelConfig m = cfg.model;
  m.encoder.genes = ds.gene_count();
  m.transport.vocab = {static_cast<Index>(ds.labels.cell_types.size()),
                       static_cast<Index>(ds.labels.perturbations.size()),
                       static_cast<Index>(ds.labels.batches.size())};
  m.validate();
  return m;
}

void fit_normalization(ParamSet& params, const Dataset& ds, const std::vector<GroupKey>& keys) {
  const Index g = ds.gene_count();
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(g), sq = Eigen::RowVectorXd::Zero(g);
  double n = 0.0;
  auto add = [&](const datastore::SparseBlock& b) {
    n += b.rows;
    for (std::uint64_t k = 0; k < b.nnz(); ++k) {
      sum(b.indices[k]) += b.values[k];
      sq(b.indices[k]) += static_cast<double>(b.values[k]) * b.values[k];
    }
  };
  for (const auto& [k, b] : ds.controls) add(b);
  for (const auto& k : keys) add(ds.groups.at(k));
  if (n == 0.0) throw DataError("normalization: no cells");
  const Eigen::RowVectorXd mean = sum / n;
  const Eigen::RowVectorXd var = (sq / n - mean.cwiseProduct(mean)).cwiseMax(0.0);
  setenc::set_normalization(params, mean, var.cwiseSqrt().cwiseMax(1e-3));
}

transport::TrainBatch make_batch(const std::vector<datastore::TrainExample>& examples) {
  if (examples.empty()) throw ArgumentError("make_batch: no examples");
  const Index b = static_cast<Index>(examples.size());
  const Index n = examples.front().x0.rows(), g = examples.front().x0.cols();
  Tensor x0(b * n, g), x1(b * n, g);
  transport::ConditionBatch cond;
  for (Index i = 0; i < b; ++i) {
    const auto& ex = examples[static_cast<std::size_t>(i)];
    x0.middleRows(i * n, n) = ex.x0;
    x1.middleRows(i * n, n) = ex.x1;
    cond.cell_type.push_back(ex.key.cell_type);
    cond.perturbation.push_back(ex.key.perturbation);
    cond.batch.push_back(ex.key.batch);
  }
  return {CellSetBatch(b, n, std::move(x0)), CellSetBatch(b, n, std::move(x1)), std::move(cond)};
}

namespace {

bool is_autoencoder_param(const std::string& name) {
  return name.rfind("enc.", 0) == 0 || name.rfind("dec.", 0) == 0 || name.rfind("norm.", 0) == 0;
}

void check_finite(const transport::LossTerms& l, Index epoch, Index step) {
  const std::pair<const char*, const Var*> terms[] = {
      {"L_MSE", &l.mse}, {"L_MMD", &l.mmd}, {"L_flow", &l.flow}, {"total", &l.total}};
  for (const auto& [name, v] : terms) {
    if (!std::isfinite(v->value()(0, 0))) {
      throw NumericError(std::string("non-finite ") + name + " at epoch " + std::to_string(epoch) + ", step " +
                         std::to_string(step));
    }
  }
}

}  // namespace

TrainResult train_model(const RunConfig& cfg, const Dataset& ds, const EpochCallback& on_epoch) {
  cfg.validate();
  const auto keys = training_keys(ds, cfg.data.holdout);
  TrainResult result{transport::init_model(resolve_model(cfg, ds), cfg.train.seed), {}};
  transport::Model& model = result.model;
  fit_normalization(model.params, ds, keys);
  result.record.config = echo_config(cfg);

  const datastore::Sampler sampler(ds, keys, cfg.data.strategy);
  std::mt19937_64 data_rng(cfg.train.seed * 2 + 1);
  std::mt19937_64 noise_rng(cfg.train.seed * 2 + 2);
  Adam opt(cfg.train.adam);

  for (Index epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    std::string phase = "joint";
    transport::LossWeights weights;
    if (cfg.train.mode == TrainMode::Stagewise) {
      const bool ae_phase = epoch < cfg.train.ae_epochs;
      phase = ae_phase ? "ae" : "transport";
      weights = ae_phase ? transport::LossWeights{1.0, 0.0} : transport::LossWeights{0.0, 1.0};
      if (!ae_phase && epoch == cfg.train.ae_epochs) opt = Adam(cfg.train.adam);
    }
    const auto start = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.phase = phase;
    for (Index step = 0; step < cfg.train.steps_per_epoch; ++step) {
      const auto batch = make_batch(sampler.sample_batch(cfg.train.sets, cfg.train.cells, data_rng));
      Tape tape;
      if (phase == "transport") tape.set_frozen(is_autoencoder_param);
      const auto loss = transport::joint_loss(tape, model, batch, noise_rng, weights);
      check_finite(loss, epoch, step);
      tape.backward(loss.total);
      opt.step(model.params, tape.leaf_grads());
      if (!model.params.all_finite()) {
        throw NumericError("non-finite parameters after update at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(step));
      }
      rec.mse += loss.mse.value()(0, 0);
      rec.mmd += loss.mmd.value()(0, 0);
      rec.flow += loss.flow.value()(0, 0);
      rec.total += loss.total.value()(0, 0);
    }
    const double steps = static_cast<double>(cfg.train.steps_per_epoch);
    rec.mse /= steps;
    rec.mmd /= steps;
    rec.flow /= steps;
    rec.total /= steps;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.record.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

}  // namespace vcell::pipeline
