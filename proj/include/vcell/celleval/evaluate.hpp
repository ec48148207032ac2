#pragma once

#include <array>
#include <string>
#include <vector>

#include "vcell/celleval/metrics.hpp"

namespace vcell::celleval {

struct EvalConfig {
  double alpha = 0.05;
  double eps = 1e-6;
  unsigned threads = 1;
};

enum Column : std::size_t {
  kMSE,
  kMAE,
  kMSEPerGene,
  kMAEPerGene,
  kR2,
  kPDCorr,
  kPDS_L1,
  kPDS_L2,
  kPDS_cos,
  kDEOver,
  kDEPrec,
  kDirAgr,
  kLFCSpear,
  kAUROC,
  kAUPRC,
  kColumnCount
};

const std::array<std::string, kColumnCount>& column_names();

/// NaN marks a metric skipped for that perturbation (empty reference set, single-class labels).
using MetricValues = std::array<double, kColumnCount>;

struct MetricRow {
  std::string id;
  Index cells = 0;
  MetricValues values{};
};

struct MetricReport {
  Index genes = 0;
  std::vector<MetricRow> rows;  // sorted by id
  MetricValues mean{};          // over rows where the metric is defined
  std::array<Index, kColumnCount> counted{};
};

/// Ingestion check: equal cell counts on all three sides and one shared gene universe.
void validate_groups(const std::vector<PerturbationGroup>& groups);

MetricReport evaluate(std::vector<PerturbationGroup> groups, const EvalConfig& config = {});

}  // namespace vcell::celleval
