#pragma once

// Batch front-end behind the CLI: one entry point per subcommand, each
// validating its configuration, computing, writing CSV/JSON reports, and
// returning the statistical verdict.

#include <string>
#include <vector>

#include "opdsim/runconfig.hpp"

namespace opd {

struct RunOutcome {
  bool stat_pass = true;               // false => exit code 4
  std::vector<std::string> files;      // paths written
  std::string summary;                 // one human-readable line
};

// name in {kernel, duality, covariance, scaling, bg-rate, lclt, expand,
// nonstationary}. Throws invalid_input for configuration errors and
// numeric_error for numerical failures.
RunOutcome run_subcommand(const std::string& name, const RunConfig& cfg);

std::vector<std::string> subcommand_names();

}  // namespace opd
