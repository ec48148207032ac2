#include "vcell/celleval/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace vcell::celleval {

namespace {

using nlohmann::json;

json values_json(const MetricValues& v) {
  json out = json::object();
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    out[column_names()[c]] = std::isnan(v[c]) ? json(nullptr) : json(v[c]);
  }
  return out;
}

MetricValues values_from(const json& j) {
  MetricValues v{};
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    const auto& x = j.at(column_names()[c]);
    v[c] = x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>();
  }
  return v;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string to_json(const MetricReport& report) {
  json j;
  j["genes"] = report.genes;
  j["perturbations"] = report.rows.size();
  j["mean"] = values_json(report.mean);
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"id", r.id}, {"cells", r.cells}, {"metrics", values_json(r.values)}});
  }
  j["per_perturbation"] = rows;
  return j.dump(2);
}

std::string to_csv(const MetricReport& report) {
  std::ostringstream out;
  out << std::setprecision(17) << "perturbation";
  for (const auto& name : column_names()) out << ',' << name;
  out << '\n';
  auto line = [&](const std::string& id, const MetricValues& v) {
    out << id;
    for (double x : v) {
      out << ',';
      if (!std::isnan(x)) out << x;
    }
    out << '\n';
  };
  for (const auto& r : report.rows) line(r.id, r.values);
  line("MEAN", report.mean);
  return out.str();
}

void write_report(const MetricReport& report, const std::filesystem::path& json_path,
                  const std::filesystem::path& csv_path) {
  write_text(json_path, to_json(report));
  write_text(csv_path, to_csv(report));
}

MetricReport report_from_json(const std::string& text) {
  MetricReport report;
  try {
    const json j = json::parse(text);
    report.genes = j.at("genes").get<Index>();
    report.mean = values_from(j.at("mean"));
    for (const auto& r : j.at("per_perturbation")) {
      report.rows.push_back({r.at("id").get<std::string>(), r.at("cells").get<Index>(), values_from(r.at("metrics"))});
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("metric report: ") + e.what());
  }
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    report.counted[c] = 0;
    for (const auto& r : report.rows) report.counted[c] += std::isnan(r.values[c]) ? 0 : 1;
  }
  return report;
}

}  // namespace vcell::celleval
