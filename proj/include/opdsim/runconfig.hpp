#pragma once

// Run configuration: a flat key = value store (INI-style sections flatten to
// section.key), strict about unknown keys, with typed accessors that validate
// on read. The same keys are settable from a config file or one by one.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "opdsim/charlier.hpp"
#include "opdsim/fields.hpp"
#include "opdsim/kernels.hpp"
#include "opdsim/lattice.hpp"

namespace opd {

class RunConfig {
public:
  RunConfig();

  static RunConfig from_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  std::string get(const std::string& key) const;  // resolved value or default

  const std::map<std::string, std::string>& resolved() const { return resolved_; }

  // Typed views used by the runners.
  int dim() const;
  std::string process() const;  // "irw" | "sep"
  KernelSpec kernel() const;    // nearest-neighbor in dim() (the shipped law)
  double rho() const;
  bool has_profile() const;
  // Profile on a window of the given radius: base + amplitude * bump(x / scale).
  DensityProfile profile(std::int64_t window_radius) const;
  std::int64_t profile_scale() const;
  TestFunction phi() const;
  std::vector<DualConfig> field_configs() const;   // 'field' key, '|'-separated
  std::vector<DualConfig> field2_configs() const;  // 'field2' key (duality cells)
  CoordVector field_coords() const;                // first 'field' entry, labeled
  std::string expression() const;                  // 'expr' key
  std::vector<std::int64_t> n_grid() const;
  std::vector<double> t_grid() const;
  double horizon() const;           // big_t
  double window_multiplier() const; // m_window
  std::int64_t replicas() const;
  std::uint64_t seed() const;
  std::string out_dir() const;      // created on demand by the runner
  std::int64_t box_radius() const;
  int particles() const;
  int order() const;                // projection order k
  double synthetic_exponent() const;  // bg-rate fit sanity mode; <= 0 disables

private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, std::string> resolved_;
};

}  // namespace opd
