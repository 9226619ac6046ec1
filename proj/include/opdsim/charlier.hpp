#pragma once

// Charlier orthogonal duality polynomials: single-site evaluation (recurrence
// and explicit hypergeometric sum), factorized duality products D(xi, eta),
// their L2(nu_rho) norms a(xi), a brute-force orthogonality oracle, and the
// expansion/projection of local functions in the duality basis.

#include <cstdint>
#include <map>
#include <optional>

#include "opdsim/expression.hpp"
#include "opdsim/lattice.hpp"

namespace opd {

// Two valid normalizations of the same duality family. `standard` is the
// canonical one used throughout: anchored at d(0,n) = 1 and satisfying the
// three-term recurrence. `monic` carries the extra per-site factor
// (-rho(x))^{xi_x}, making the leading falling-factorial coefficient 1; the
// non-stationary identities only close in this normalization because that
// leading coefficient must not depend on the (site- and time-varying) density.
enum class PolyNorm { standard, monic };

struct PolyParams {
  double rho = 1.0;
  const DensityProfile* profile = nullptr;  // overrides rho per site when set

  double at(const Site& s) const { return profile ? profile->at(s) : rho; }
  void validate() const;
};

// Single-site polynomial d(k, n) at density rho, via the three-term
// recurrence d(k+1,n) = d(k,n) - (n/rho) d(k,n-1), d(0,n) = 1.
double charlier(std::int64_t k, std::int64_t n, double rho);

// Same value via the explicit sum  sum_j C(k,j) (-rho)^{-j} n!/(n-j)!.
double charlier_explicit(std::int64_t k, std::int64_t n, double rho);

// Classical (non-orthogonal) single-site duality polynomial n!/(n-k)!.
double classical_single(std::int64_t k, std::int64_t n);

// Conversion factor between normalizations: monic = factor * standard,
// factor = prod_x (-rho(x))^{xi_x}.
double normalization_factor(const DualConfig& xi, const PolyParams& params);

// D(xi, eta) = prod_x d(xi_x, eta_x). Throws if xi has mass outside eta's window.
double duality_product(const DualConfig& xi, const OccupationState& eta, const PolyParams& params,
                       PolyNorm norm = PolyNorm::standard);

// a(xi) = ||D(xi,.)||^2 under the Poisson product measure:
// prod_x xi_x! rho(x)^{-xi_x} (standard) or prod_x xi_x! rho(x)^{xi_x} (monic).
double norm_a(const DualConfig& xi, const PolyParams& params, PolyNorm norm = PolyNorm::standard);

// Brute-force integral of D(xi,.)D(xi2,.) d nu_rho by truncated per-site
// Poisson sums; within tail_tol of delta_{xi,xi2} a(xi). Independent of the
// closed forms above except for single-site evaluations.
double orthogonality_oracle(const DualConfig& xi, const DualConfig& xi2, const PolyParams& params,
                            double tail_tol = 1e-12, PolyNorm norm = PolyNorm::standard);

// Expansion of a function in the duality basis: coefficients C_xi indexed by
// dual configurations, f = sum_xi C_xi D(xi, .).
struct BasisExpansion {
  std::map<DualConfig, double> coeff;

  std::int64_t degree() const;
  double at(const DualConfig& xi) const {
    auto it = coeff.find(xi);
    return it == coeff.end() ? 0.0 : it->second;
  }
  // Mean under nu_rho: the empty-configuration coefficient.
  double mean() const { return at(DualConfig{}); }

  double evaluate(const OccupationState& eta, const PolyParams& params) const;
};

// C_xi = <f, D(xi,.)> / a(xi) via truncated per-site Poisson sums; supported
// on supp(f) with ||xi|| <= deg(f).
BasisExpansion expand_local_function(const LocalFunction& f, const PolyParams& params,
                                     double tail_tol = 1e-12);

// Keep exactly the coefficients with ||xi|| <= n (projection on H_n).
BasisExpansion project(const BasisExpansion& f, std::int64_t n);

// sum over equal-degree pairs of |C_xi C_xi'| a(xi').
double expansion_condition_sum(const BasisExpansion& f, const PolyParams& params);

// Poisson pmf helper shared with the oracles and samplers.
double poisson_pmf(double lambda, std::int64_t n);

}  // namespace opd
