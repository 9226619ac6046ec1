#include "opdsim/report.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "opdsim/errors.hpp"

namespace opd {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Trim to the shortest representation that round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char probe[64];
    std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(probe, "%lf", &back);
    if (back == v) return probe;
  }
  return buf;
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != columns.size()) throw invalid_input("csv row width mismatch");
  rows.push_back(std::move(row));
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // '\n' endings on every platform
  if (!out) throw numeric_error("cannot open output file: " + path);
  return out;
}

}  // namespace

void write_csv(const std::string& path, const CsvTable& table,
               const std::map<std::string, std::string>& provenance) {
  std::ofstream out = open_out(path);
  out << "# " << kVersion << "\n";
  for (const auto& [k, v] : provenance) out << "# " << k << " = " << v << "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    out << (i ? "," : "") << table.columns[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

void write_json(const std::string& path, const std::map<std::string, std::string>& config,
                const std::string& results_json) {
  nlohmann::json doc;
  doc["version"] = kVersion;
  doc["config"] = config;
  doc["results"] = nlohmann::json::parse(results_json);
  std::ofstream out = open_out(path);
  out << doc.dump(2) << "\n";
}

}  // namespace opd
