#pragma once

// Deterministic CSV/JSON emission with embedded provenance. Reports are
// byte-identical across reruns of the same configuration and seed: fixed
// float formatting, sorted keys, no timestamps.

#include <map>
#include <string>
#include <vector>

namespace opd {

inline constexpr const char* kVersion = "opdsim 0.1.0";

std::string format_double(double v);  // shortest round-trip decimal

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
};

// Writes '#'-prefixed provenance lines (version and resolved config), one
// header row, then the data rows. Comma separated, '.' decimal, UTF-8.
void write_csv(const std::string& path, const CsvTable& table,
               const std::map<std::string, std::string>& provenance);

// JSON sidecar: {"version", "config", "results"} with results passed as
// pre-rendered JSON text.
void write_json(const std::string& path, const std::map<std::string, std::string>& config,
                const std::string& results_json);

}  // namespace opd
