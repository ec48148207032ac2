#include "vcell/celleval/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

namespace vcell::celleval {

const std::array<std::string, kColumnCount>& column_names() {
  static const std::array<std::string, kColumnCount> names = {
      "MSE",     "MAE",    "MSE_per_gene", "MAE_per_gene", "R2",       "PDCorr", "PDS_L1", "PDS_L2",
      "PDS_cos", "DEOver", "DEPrec",       "DirAgr",       "LFCSpear", "AUROC",  "AUPRC"};
  return names;
}

void validate_groups(const std::vector<PerturbationGroup>& groups) {
  if (groups.empty()) throw DataError("evaluate: no perturbation groups");
  const Index genes = groups.front().pert.cols();
  std::set<std::string> ids;
  for (const auto& g : groups) {
    if (!ids.insert(g.id).second) throw DataError("evaluate: duplicate perturbation '" + g.id + "'");
    if (g.pert.cols() != genes || g.ctrl.cols() != genes || g.pred.cols() != genes) {
      throw DataError("evaluate: gene universe mismatch in '" + g.id + "'");
    }
    if (g.pert.rows() < 1) throw DataError("evaluate: '" + g.id + "' has no cells");
    if (g.ctrl.rows() != g.pert.rows() || g.pred.rows() != g.pert.rows()) {
      throw DataError("evaluate: '" + g.id + "' has " + std::to_string(g.pert.rows()) + " perturbed, " +
                      std::to_string(g.ctrl.rows()) + " control and " + std::to_string(g.pred.rows()) +
                      " predicted cells; counts must match");
    }
    if (!g.pert.allFinite() || !g.ctrl.allFinite() || !g.pred.allFinite()) {
      throw DataError("evaluate: non-finite values in '" + g.id + "'");
    }
  }
}

namespace {

constexpr double kSkipped = std::numeric_limits<double>::quiet_NaN();

double or_skip(const std::optional<double>& v) { return v ? *v : kSkipped; }

struct PerGroup {
  DeltaEffect delta;
  MetricValues values{};
};

PerGroup evaluate_one(const PerturbationGroup& g, const EvalConfig& cfg) {
  PerGroup out;
  out.delta = pseudobulk_delta(g);
  auto& v = out.values;
  const double genes = static_cast<double>(g.pert.cols());
  const VectorXd diff = out.delta.pred - out.delta.truth;
  v[kMSE] = diff.squaredNorm();
  v[kMAE] = diff.lpNorm<1>();
  v[kMSEPerGene] = v[kMSE] / genes;
  v[kMAEPerGene] = v[kMAE] / genes;
  v[kR2] = g.pert.cols() >= 2 ? r_squared(g.pred.colwise().mean().transpose(), g.pert.colwise().mean().transpose())
                              : kSkipped;
  v[kPDCorr] = pearson(out.delta.pred, out.delta.truth);

  const DEResult truth = differential_expression(g.pert, g.ctrl, cfg.alpha, cfg.eps);
  const DEResult pred = differential_expression(g.pred, g.ctrl, cfg.alpha, cfg.eps);
  const DEPattern pattern = de_pattern_metrics(truth, pred);
  v[kDEOver] = or_skip(pattern.overlap);
  v[kDEPrec] = or_skip(pattern.precision);
  v[kDirAgr] = or_skip(pattern.direction);
  v[kLFCSpear] = or_skip(pattern.spearman);
  const RankingMetrics ranking = ranking_metrics(truth, pred);
  v[kAUROC] = or_skip(ranking.auroc);
  v[kAUPRC] = or_skip(ranking.auprc);
  return out;
}

}  // namespace

MetricReport evaluate(std::vector<PerturbationGroup> groups, const EvalConfig& config) {
  validate_groups(groups);
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  std::vector<PerGroup> results(groups.size());
  const unsigned workers = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(groups.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < groups.size(); ++i) results[i] = evaluate_one(groups[i], config);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < groups.size(); i = next++) {
          try {
            results[i] = evaluate_one(groups[i], config);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  MetricReport report;
  report.genes = groups.front().pert.cols();
  std::vector<DeltaEffect> deltas;
  for (const auto& r : results) deltas.push_back(r.delta);
  const double m = static_cast<double>(groups.size());
  const std::array<std::pair<Column, Distance>, 3> pds_columns = {
      {{kPDS_L1, Distance::L1}, {kPDS_L2, Distance::L2}, {kPDS_cos, Distance::Cosine}}};
  for (const auto& [col, dist] : pds_columns) {
    if (groups.size() < 2) {
      for (auto& r : results) r.values[col] = kSkipped;
      continue;
    }
    const auto ranks = pds_ranks(deltas, dist);
    for (std::size_t i = 0; i < results.size(); ++i) {
      results[i].values[col] = 1.0 - static_cast<double>(ranks[i]) / m;
    }
  }

  report.mean.fill(0.0);
  report.counted.fill(0);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    MetricRow row{groups[i].id, groups[i].pert.rows(), results[i].values};
    for (std::size_t c = 0; c < kColumnCount; ++c) {
      if (!std::isnan(row.values[c])) {
        report.mean[c] += row.values[c];
        ++report.counted[c];
      }
    }
    report.rows.push_back(std::move(row));
  }
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    report.mean[c] = report.counted[c] > 0 ? report.mean[c] / static_cast<double>(report.counted[c]) : kSkipped;
  }
  return report;
}

}  // namespace vcell::celleval
