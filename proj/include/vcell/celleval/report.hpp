#pragma once

#include <filesystem>
#include <string>

#include "vcell/celleval/evaluate.hpp"

namespace vcell::celleval {

/// Skipped metrics become null.
std::string to_json(const MetricReport& report);
/// One row per perturbation plus a MEAN row; skipped metrics are empty cells.
std::string to_csv(const MetricReport& report);

void write_report(const MetricReport& report, const std::filesystem::path& json_path,
                  const std::filesystem::path& csv_path);

MetricReport report_from_json(const std::string& text);

}  // namespace vcell::celleval
