#pragma once

// Fluctuation fields of duality polynomials and local functions, exact and
// Monte Carlo space-time covariances, scaling-limit comparisons, the
// quantitative double time integrals with exponent fits, projection-field
// covariances, and non-stationary (local-equilibrium) identities.

#include <cstdint>
#include <vector>

#include "opdsim/charlier.hpp"
#include "opdsim/fitting.hpp"
#include "opdsim/kernels.hpp"
#include "opdsim/lattice.hpp"

namespace opd {

// Compactly supported C^2 bump phi(u) = amplitude * (1 - |u-center|^2/radius^2)^3.
struct TestFunction {
  int dim = 1;
  std::vector<double> center;
  double radius = 1.0;
  double amplitude = 1.0;

  static TestFunction bump(int dim, double radius = 1.0, double amplitude = 1.0);

  double value(const std::vector<double>& u) const;
  double at_site(const Site& x, std::int64_t N) const;
  double norm_inf() const { return std::fabs(amplitude); }
  double norm_1() const;
  // Lattice sites where phi(x/N) may be nonzero: |x_i - N c_i| <= ceil(N r).
  std::int64_t lattice_halfwidth(std::int64_t N) const;
  std::int64_t lattice_center(int axis, std::int64_t N) const;
};

// X_N(x, eta, phi) = sum_z phi(z/N) D(tau_z xi(x), eta); orthogonal
// polynomials are mean-zero under nu_rho, so no centering is applied.
double polynomial_field(const CoordVector& x, const OccupationState& eta, const TestFunction& phi,
                        std::int64_t N, const PolyParams& params);
double polynomial_field(const DualConfig& xi, const OccupationState& eta, const TestFunction& phi,
                        std::int64_t N, const PolyParams& params);

// X_N(f, eta, phi) = a_N sum_x phi(x/N) (tau_x f(eta) - psi_f(rho)) with
// a_N = N^{-d/2} for degree-1 fields and 1 otherwise.
double function_field(const BasisExpansion& f, const OccupationState& eta, const TestFunction& phi,
                      std::int64_t N, const PolyParams& params, bool centered = true);

// Exact E_{nu_rho}[X_N(x, eta(t)) X_N(x, eta(0))] at microscopic time t:
// a(xi(x)) sum_sigma sum_{y,z} phi(y/N) phi(z/N) p_t(x, tau_{z-y} x^sigma).
double exact_stationary_covariance(const CoordVector& x, const TestFunction& phi, std::int64_t N,
                                   double t, const KernelSpec& spec, const PolyParams& params);

struct CovarianceReport {
  double value = 0.0;
  double stderr_of_mean = 0.0;  // zero for exact results
  bool exact = false;
  std::int64_t replicas = 0;
  std::uint64_t seed = 0;
};

// MC estimate of the same covariance: eta(0) ~ nu_rho, evolve to microscopic
// time t, average the field product over replicas.
CovarianceReport mc_covariance(const CoordVector& x, const TestFunction& phi, std::int64_t N,
                               double t, const KernelSpec& spec, const PolyParams& params,
                               std::int64_t replicas, std::uint64_t seed);

// Same for the centered field of a general expansion.
CovarianceReport mc_covariance(const BasisExpansion& f, const TestFunction& phi, std::int64_t N,
                               double t, const KernelSpec& spec, const PolyParams& params,
                               std::int64_t replicas, std::uint64_t seed);

// Gaussian limit of the rescaled covariance at macroscopic time t:
// |P_k(x)| a(xi(x)) prod_axis (k/(2 pi t sigma_a^2))^{1/2}-normalized integral
// (reduces to the displayed d^{dk/2}/(2 pi t)^{dk/2} form for the NN law).
double scaling_limit_integral(const CoordVector& x, const TestFunction& phi, double t,
                              const KernelSpec& spec, const PolyParams& params);

struct ScalingRow {
  std::int64_t N = 0;
  double rescaled = 0.0;  // N^{d(k-2)} * exact covariance at time N^2 t
  double limit = 0.0;
  double rel_dev = 0.0;
};

std::vector<ScalingRow> scaling_limit_check(const CoordVector& x, const TestFunction& phi,
                                            const std::vector<std::int64_t>& N_grid, double t,
                                            const KernelSpec& spec, const PolyParams& params);

// (1/N^d) int_0^T int_0^T cov(N^2 t, N^2 s) ds dt, computed as a 1-d integral
// of the time-difference covariance with geometric refinement near the
// diagonal (the covariance varies on the scale |t-s| ~ N^{-2}).
double bg_double_integral(const CoordVector& x, const TestFunction& phi, std::int64_t N, double T,
                          const KernelSpec& spec, const PolyParams& params);

struct RateFit {
  std::vector<std::int64_t> N_grid;
  std::vector<double> values;
  LogLogFit fit;
  double alpha = 0.0;  // theoretical exponent 2(k-1)d/(2+(k-1)d)
  bool pass = false;   // fit.slope <= -alpha + margin
};

double bg_theoretical_exponent(int k, int dim);
RateFit fit_bg_exponent(const std::vector<std::int64_t>& N_grid, const std::vector<double>& values,
                        int k, int dim, double margin = 0.15);

// Covariance of X_N(f - f_{k-1}) at microscopic time t: the surviving
// equal-degree coefficient pairs against the configuration kernel.
double projection_field_covariance(const BasisExpansion& f, int k, const TestFunction& phi,
                                   std::int64_t N, double t, const KernelSpec& spec,
                                   const PolyParams& params);

// Double time integral of the projected field, same reduction as
// bg_double_integral.
double projection_bg_double_integral(const BasisExpansion& f, int k, const TestFunction& phi,
                                     std::int64_t N, double T, const KernelSpec& spec,
                                     const PolyParams& params);

struct NonstationaryReport {
  double mc_mean = 0.0;
  double mc_stderr = 0.0;
  double exact = 0.0;
  double z = 0.0;
};

// Stationary covariance identity, one cell:
//   int E_eta[D(xi, eta_t)] D(xi', eta) d nu_rho = p_t(xi, xi') a(xi'),
// MC left side against the exact right side (canonical normalization).
NonstationaryReport stationary_duality_cell(const DualConfig& xi, const DualConfig& xi2, double t,
                                            const KernelSpec& spec, const PolyParams& params,
                                            std::int64_t replicas, std::uint64_t seed);

// Monte Carlo check of the inhomogeneous covariance identity
//   int E_eta[D_{rho_t}(xi, eta_t)] D_{rho_0}(xi', eta) d nu_{rho_0}
//     = p_t(xi, xi') a_0(xi'),
// with the monic normalization (the identity needs the leading coefficient to
// be density-independent) and rho_t from heat_evolve_profile.
NonstationaryReport nonstationary_covariance_check(const DualConfig& xi, const DualConfig& xi2,
                                                   const DensityProfile& rho0, double t,
                                                   const KernelSpec& spec, std::int64_t replicas,
                                                   std::uint64_t seed);

// Local-equilibrium propagation: z-scores of the first three factorial
// moments of eta_x(t) against powers of rho_t(x), per probe site.
struct MomentCheckRow {
  Site site;
  double rho_t = 0.0;
  double z1 = 0.0, z2 = 0.0, z3 = 0.0;
};
std::vector<MomentCheckRow> profile_moment_check(const DensityProfile& rho0, double t,
                                                 const KernelSpec& spec,
                                                 const std::vector<Site>& probes,
                                                 std::int64_t replicas, std::uint64_t seed);

}  // namespace opd
