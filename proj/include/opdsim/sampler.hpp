#pragma once

// Monte Carlo engine: Poisson-product initial states, forward simulation of
// independent walkers and symmetric exclusion on periodic windows, generator
// application for micro-tests, and a deterministic replica-parallel driver.

#include <cstdint>
#include <functional>
#include <vector>

#include "opdsim/charlier.hpp"
#include "opdsim/expression.hpp"
#include "opdsim/kernels.hpp"
#include "opdsim/lattice.hpp"
#include "opdsim/rng.hpp"

namespace opd {

// eta_x ~ Poisson(rho(x)) independently over the window.
OccupationState sample_poisson_product(const PolyParams& params, const Window& window,
                                       RngStream& rng);

// Each particle walks independently: Poisson(t) jump count, i.i.d.
// displacements from the jump law, wrapped on the torus.
OccupationState evolve_irw(const OccupationState& eta, double t, const KernelSpec& spec,
                           RngStream& rng);

// Graphical construction with one rate-p(z) swap clock per unordered edge
// {x, x+z}; input must be hardcore (eta_x in {0,1}).
OccupationState evolve_sep(const OccupationState& eta, double t, const KernelSpec& spec,
                           RngStream& rng);

// L f(eta) = sum_{i,j} p(j-i) eta_i (f(eta^{ij}) - f(eta)), a finite sum for
// local f. The support of f plus one kernel range must fit in the window.
double generator_apply(const LocalFunction& f, const OccupationState& eta, const KernelSpec& spec);

// Snapshots of one trajectory at the requested observation times. Time is
// continuous; segments are advanced exactly between snapshots.
struct Trajectory {
  std::vector<double> times;               // strictly increasing
  std::vector<OccupationState> snapshots;  // one per time
  std::uint64_t seed = 0;                  // stream provenance
};

Trajectory simulate_trajectory(const OccupationState& eta0, const std::vector<double>& times,
                               const KernelSpec& spec, Process process, std::uint64_t seed);

// CSV rows (time, site coordinates..., count), one row per occupied or
// unoccupied site per snapshot.
void write_trajectory_csv(const std::string& path, const Trajectory& trajectory);

struct DualityCheckResult {
  double mc_mean = 0.0;    // MC estimate of E_eta[D(xi, eta_t)]
  double mc_stderr = 0.0;
  double exact = 0.0;      // sum_xi' p_t(xi, xi') D(xi', eta)
  double z = 0.0;
};

// Self-duality check at a fixed starting configuration eta.
DualityCheckResult duality_check(const DualConfig& xi, const OccupationState& eta, double t,
                                 const KernelSpec& spec, const PolyParams& params,
                                 std::int64_t replicas, std::uint64_t seed);

// Deterministic replica-parallel accumulation. Replicas are processed in
// fixed chunks whose partial sums are reduced in index order, so the result
// is identical for any worker count. The functor receives (replica index,
// stream) and returns one sample; side observables can be accumulated via
// additional samples per replica.
struct MeanStderr {
  double mean = 0.0;
  double stderr_of_mean = 0.0;
  std::int64_t n = 0;
};

MeanStderr run_replicas(std::int64_t replicas, std::uint64_t seed,
                        const std::function<double(std::int64_t, RngStream&)>& sample);

// Multi-observable variant: the functor fills a fixed-size vector per replica;
// returns per-observable means and standard errors.
std::vector<MeanStderr> run_replicas_multi(
    std::int64_t replicas, std::uint64_t seed, std::size_t observables,
    const std::function<void(std::int64_t, RngStream&, std::vector<double>&)>& fill);

// Worker count: OPDSIM_THREADS when set, otherwise hardware concurrency.
int worker_count();

}  // namespace opd
