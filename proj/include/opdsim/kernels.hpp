#pragma once

// Exact transition kernels for the single walker and for k independent
// walkers: continuous-time lattice kernels by uniformization (Poisson-weighted
// convolution powers), the Gaussian comparison kernel, local-CLT ratio scans,
// labeled and configuration k-particle kernels, and heat evolution of density
// profiles.

#include <cstdint>
#include <utility>
#include <vector>

#include "opdsim/lattice.hpp"

namespace opd {

enum class Process { irw, sep };

// Single-particle jump distribution p(0, z): finite range, symmetric,
// normalized, irreducible.
struct KernelSpec {
  int dim = 1;
  std::vector<std::pair<Site, double>> jumps;  // positive-probability entries
  std::int64_t range = 0;                      // max |z|_inf over the support

  static KernelSpec nearest_neighbor(int dim);
  void validate() const;
  double at(const Site& z) const;
  // True when the support lies on the coordinate axes, so the walk splits
  // into independent per-axis 1-d walks (Poisson thinning).
  bool axis_factorizable() const;
  // Per-axis variance sum_z p(z) z_i^2.
  std::vector<double> axis_variance() const;
};

// p_t restricted to [-radius, radius]^d, zero outside; the neglected mass is
// bounded by truncation_error.
struct KernelTable {
  int dim = 1;
  std::int64_t radius = 0;
  double t = 0.0;
  std::vector<double> v;
  double truncation_error = 0.0;

  double at(const Site& x) const {
    if (x.norm_inf() > radius) return 0.0;
    std::size_t idx = 0;
    for (int i = 0; i < dim; ++i)
      idx = idx * static_cast<std::size_t>(2 * radius + 1) + static_cast<std::size_t>(x.c[i] + radius);
    return v[idx];
  }
  double total() const;
  Window window() const { return Window(dim, radius); }
};

struct KernelOptions {
  double tail_tol = 1e-14;       // Poisson tail kept out of the series
  std::int64_t max_radius = -1;  // clip the output table (<0: natural support)
};

// Smallest N with P(Poisson(lambda) > N) < tol.
std::int64_t poisson_series_cutoff(double lambda, double tol);

// p_t by uniformization. Axis-aligned laws in d >= 2 are computed exactly as
// products of per-axis 1-d kernels; other laws use the dense d-dimensional
// convolution sweep (memory-guarded).
KernelTable rw_kernel(const KernelSpec& spec, double t, const KernelOptions& opts = {});

// Many times from one convolution sweep, each table clipped to `radius`.
std::vector<KernelTable> rw_kernel_multi(const KernelSpec& spec, const std::vector<double>& times,
                                         std::int64_t radius, double tail_tol = 1e-14);

// The 1-d kernel of one axis of an axis-aligned law at the given walk times
// (Poisson thinning: axis i carries the jump rate of its own weights).
std::vector<KernelTable> rw_kernel_axis(const KernelSpec& spec, int axis,
                                        const std::vector<double>& times, std::int64_t radius,
                                        double tail_tol = 1e-14);

// Normalized Gaussian comparison kernel for the NN walk (per-step covariance
// I/d): (d/(2 pi t))^{d/2} exp(-d|x|^2/(2t)).
double gaussian_kernel(int dim, double t, double x_norm2);
double gaussian_kernel(int dim, double t, const Site& x);

// Gaussian comparison for a general axis-diagonal jump law, from its
// per-axis variances. Coincides with gaussian_kernel for the NN law.
double gaussian_comparison(const KernelSpec& spec, double t, const Site& x);

struct LcltResult {
  double deviation = 0.0;  // sup over |x| <= M sqrt(t) of |p_t(x)/pbar_t(x) - 1|
  Site argmax;
};
LcltResult lclt_ratio(const KernelSpec& spec, double t, double M);

// Product kernel of labeled independent walkers.
double labeled_kernel(const KernelTable& table, const CoordVector& from, const CoordVector& to);

// Configuration kernel: sum over labelings x' with xi(x') = xi2 of the
// labeled kernel from any fixed labeling of xi. Satisfies detailed balance
// p_t(xi,xi') a(xi') = p_t(xi',xi) a(xi).
double config_kernel(const KernelTable& table, const DualConfig& xi, const DualConfig& xi2);

// Radius r with sum_{|x|_inf > r} p_t(x) < eps (via the Poisson jump-count
// bound |X_t|_inf <= range * N_t).
std::int64_t kernel_spread_radius(const KernelSpec& spec, double t, double eps);

// rho_t(x) = sum_y p_t(x-y) rho(y) on the periodic window.
DensityProfile heat_evolve_profile(const KernelSpec& spec, const DensityProfile& profile, double t);

}  // namespace opd
