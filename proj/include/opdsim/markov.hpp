#pragma once

// Finite-state dual dynamics on a periodic 1-d box: k independent walkers or
// k symmetric-exclusion particles, with exact transient kernels by
// uniformization (dense matrix via scaling-and-squaring, or a single row by
// vector iteration) and the kernel decay-exponent check.

#include <cstdint>
#include <vector>

#include "opdsim/fitting.hpp"
#include "opdsim/kernels.hpp"
#include "opdsim/lattice.hpp"

namespace opd {

struct FiniteGenerator {
  Process process = Process::irw;
  Window window;                                // 1-d periodic box
  int particles = 0;                            // conserved dual particle count
  std::vector<std::vector<std::int16_t>> states;  // occupation vectors, lex order
  std::vector<std::vector<std::pair<std::int32_t, double>>> rows;  // off-diagonal rates
  std::vector<double> exit_rate;

  std::size_t size() const { return states.size(); }
  std::int32_t state_index(const DualConfig& xi) const;
  DualConfig state_config(std::int32_t idx) const;
};

FiniteGenerator build_finite_generator(Process process, const Window& window, int particles,
                                       const KernelSpec& spec,
                                       std::size_t max_states = 100000);

// Dense e^{tQ}, row-major size x size; rows sum to 1 within 1e-10.
std::vector<double> finite_state_kernel(const FiniteGenerator& gen, double t);

// Single row of e^{tQ} from the given start configuration.
std::vector<double> finite_state_row(const FiniteGenerator& gen, const DualConfig& from, double t);

// Fit of log sup_xi' p_t(xi, xi') against log(1 + t); passes when the slope
// is at most -k d / 2 + margin.
struct DecayCheck {
  LogLogFit fit;
  double threshold = 0.0;
  bool pass = false;
  std::vector<std::pair<double, double>> samples;  // (t, sup)
};

DecayCheck decay_bound_check(const std::vector<std::pair<double, double>>& t_sup, int particles,
                             int dim, double margin = 0.15);

}  // namespace opd
