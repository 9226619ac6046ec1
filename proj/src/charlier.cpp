#include "opdsim/charlier.hpp"

#include <cmath>
#include <vector>

namespace opd {

void PolyParams::validate() const {
  if (profile) {
    profile->validate();
  } else if (!(rho > 0) || !std::isfinite(rho)) {
    throw invalid_input("density must be strictly positive and finite");
  }
}

namespace {

void check_rho(double rho) {
  if (!(rho > 0) || !std::isfinite(rho)) throw invalid_input("density must be strictly positive and finite");
}

long double charlier_ld(std::int64_t k, std::int64_t n, double rho) {
  if (k == 0) return 1.0L;
  // Level j holds d(j, n-i) for i = 0..k-j; the triangle under (k, n) is all
  // that feeds the target. Entries at negative occupancy are weight-killed by
  // the n-factor in the recurrence.
  const long double inv_rho = 1.0L / static_cast<long double>(rho);
  const std::size_t width = static_cast<std::size_t>(k) + 1;
  std::vector<long double> cur(width), next(width);
  for (std::size_t i = 0; i < width; ++i)
    cur[i] = (n - static_cast<std::int64_t>(i) >= 0) ? 1.0L : 0.0L;  // d(0, .) = 1
  for (std::int64_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < static_cast<std::size_t>(k - j); ++i) {
      const std::int64_t m = n - static_cast<std::int64_t>(i);
      if (m > 0) {
        next[i] = cur[i] - static_cast<long double>(m) * inv_rho * cur[i + 1];
      } else {
        next[i] = (m == 0) ? cur[i] : 0.0L;
      }
    }
    std::swap(cur, next);
  }
  return cur[0];
}

}  // namespace

double charlier(std::int64_t k, std::int64_t n, double rho) {
  check_rho(rho);
  if (k < 0 || n < 0) throw invalid_input("charlier indices must be nonnegative");
  return static_cast<double>(charlier_ld(k, n, rho));
}

double charlier_explicit(std::int64_t k, std::int64_t n, double rho) {
  check_rho(rho);
  if (k < 0 || n < 0) throw invalid_input("charlier indices must be nonnegative");
  const long double inv = -1.0L / static_cast<long double>(rho);
  long double sum = 0.0L;
  long double binom = 1.0L;    // C(k, j)
  long double falling = 1.0L;  // n!/(n-j)!
  long double sign_pow = 1.0L;  // (-1/rho)^j
  const std::int64_t jmax = std::min(k, n);
  for (std::int64_t j = 0; j <= jmax; ++j) {
    sum += binom * sign_pow * falling;
    binom = binom * static_cast<long double>(k - j) / static_cast<long double>(j + 1);
    falling *= static_cast<long double>(n - j);
    sign_pow *= inv;
  }
  return static_cast<double>(sum);
}

double classical_single(std::int64_t k, std::int64_t n) {
  if (k < 0 || n < 0) throw invalid_input("indices must be nonnegative");
  if (k > n) return 0.0;
  if (n <= 20 || k <= 1) {
    long double v = 1.0L;
    for (std::int64_t j = 0; j < k; ++j) v *= static_cast<long double>(n - j);
    return static_cast<double>(v);
  }
  return std::exp(std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(n - k) + 1.0));
}

double normalization_factor(const DualConfig& xi, const PolyParams& params) {
  params.validate();
  double f = 1.0;
  for (const auto& [s, m] : xi.mult) {
    const double r = -params.at(s);
    for (std::int64_t i = 0; i < m; ++i) f *= r;
  }
  return f;
}

double duality_product(const DualConfig& xi, const OccupationState& eta, const PolyParams& params,
                       PolyNorm norm) {
  params.validate();
  double v = 1.0;
  for (const auto& [s, m] : xi.mult) {
    if (!eta.window.contains_unwrapped(s))
      throw invalid_input("dual configuration has mass outside the occupation window");
    const double r = params.at(s);
    double d = charlier(m, eta.at(s), r);
    if (norm == PolyNorm::monic) {
      for (std::int64_t i = 0; i < m; ++i) d *= -r;
    }
    v *= d;
  }
  return v;
}

double norm_a(const DualConfig& xi, const PolyParams& params, PolyNorm norm) {
  params.validate();
  long double v = 1.0L;
  for (const auto& [s, m] : xi.mult) {
    const long double r = static_cast<long double>(params.at(s));
    for (std::int64_t i = 1; i <= m; ++i) {
      v *= static_cast<long double>(i);
      v *= (norm == PolyNorm::standard) ? (1.0L / r) : r;
    }
  }
  return static_cast<double>(v);
}

double poisson_pmf(double lambda, std::int64_t n) {
  if (n < 0) return 0.0;
  return std::exp(-lambda + static_cast<double>(n) * std::log(lambda) -
                  std::lgamma(static_cast<double>(n) + 1.0));
}

namespace {

constexpr std::int64_t kMaxOccupancy = 1 << 14;

// Truncated sum_n pois_rho(n) g(n) with g of polynomial growth. The Poisson
// tail decays superexponentially past lambda; stop once min_n is passed and
// eight consecutive terms fall below tol/8 each.
template <typename G>
long double poisson_sum(double rho, std::int64_t min_n, double tol, G&& g) {
  long double acc = 0.0L;
  int quiet = 0;
  for (std::int64_t n = 0; n <= kMaxOccupancy; ++n) {
    const long double term = static_cast<long double>(poisson_pmf(rho, n)) * g(n);
    acc += term;
    if (n > min_n) {
      if (std::fabs(static_cast<double>(term)) < tol / 8.0) {
        if (++quiet >= 8) return acc;
      } else {
        quiet = 0;
      }
    }
  }
  throw numeric_error("poisson tail truncation target not reachable within the occupancy cap");
}

std::int64_t tail_start(double rho, std::int64_t degree) {
  return static_cast<std::int64_t>(rho + 10.0 * std::sqrt(rho + 1.0)) + 2 * degree + 10;
}

}  // namespace

double orthogonality_oracle(const DualConfig& xi, const DualConfig& xi2, const PolyParams& params,
                            double tail_tol, PolyNorm norm) {
  params.validate();
  if (!(tail_tol > 0)) throw invalid_input("tail tolerance must be positive");
  std::map<Site, std::pair<std::int64_t, std::int64_t>> sites;
  for (const auto& [s, m] : xi.mult) sites[s].first = m;
  for (const auto& [s, m] : xi2.mult) sites[s].second = m;
  long double v = 1.0L;
  for (const auto& [s, km] : sites) {
    const double r = params.at(s);
    const auto [a, b] = km;
    long double site = poisson_sum(r, tail_start(r, a + b), tail_tol, [&](std::int64_t n) {
      return static_cast<long double>(charlier(a, n, r)) * static_cast<long double>(charlier(b, n, r));
    });
    if (norm == PolyNorm::monic) {
      for (std::int64_t i = 0; i < a + b; ++i) site *= -static_cast<long double>(r);
    }
    v *= site;
  }
  return static_cast<double>(v);
}

std::int64_t BasisExpansion::degree() const {
  std::int64_t d = 0;
  for (const auto& [xi, c] : coeff) d = std::max(d, xi.size());
  return d;
}

double BasisExpansion::evaluate(const OccupationState& eta, const PolyParams& params) const {
  double v = 0.0;
  for (const auto& [xi, c] : coeff) v += c * duality_product(xi, eta, params);
  return v;
}

namespace {

// <n^e, d(k, n)> under Poisson(rho); zero for k > e by degree orthogonality.
double moment_vs_charlier(std::int64_t e, std::int64_t k, double rho, double tol) {
  if (k > e) return 0.0;
  return static_cast<double>(poisson_sum(rho, tail_start(rho, e + k), tol, [&](std::int64_t n) {
    long double m = 1.0L;
    for (std::int64_t i = 0; i < e; ++i) m *= static_cast<long double>(n);
    return m * static_cast<long double>(charlier(k, n, rho));
  }));
}

void enumerate_configs(const std::vector<Site>& sites, const std::vector<int>& caps,
                       std::int64_t max_total, std::size_t i, DualConfig& cur,
                       std::vector<DualConfig>& out) {
  if (i == sites.size()) {
    out.push_back(cur);
    return;
  }
  enumerate_configs(sites, caps, max_total, i + 1, cur, out);
  DualConfig with = cur;
  for (int m = 1; m <= caps[i] && with.size() < max_total; ++m) {
    with.add(sites[i], 1);
    if (with.size() > max_total) break;
    enumerate_configs(sites, caps, max_total, i + 1, with, out);
  }
}

}  // namespace

BasisExpansion expand_local_function(const LocalFunction& f, const PolyParams& params,
                                     double tail_tol) {
  params.validate();
  const std::vector<Site> sites = f.support();
  std::vector<int> caps(sites.size(), 0);
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (const auto& t : f.terms) {
      auto it = t.powers.find(sites[i]);
      if (it != t.powers.end()) caps[i] = std::max(caps[i], it->second);
    }

  std::vector<DualConfig> candidates;
  DualConfig empty;
  enumerate_configs(sites, caps, f.degree(), 0, empty, candidates);

  BasisExpansion out;
  for (const auto& xi : candidates) {
    long double inner = 0.0L;
    for (const auto& t : f.terms) {
      // <monomial, D(xi,.)> factorizes site by site; a site carrying xi-mass
      // but no monomial power integrates to zero.
      bool vanishes = false;
      for (const auto& [s, m] : xi.mult)
        if (t.powers.find(s) == t.powers.end()) {
          vanishes = true;
          break;
        }
      if (vanishes) continue;
      long double prod = t.coef;
      for (const auto& [s, e] : t.powers)
        prod *= static_cast<long double>(moment_vs_charlier(e, xi.at(s), params.at(s), tail_tol));
      inner += prod;
    }
    const double c = static_cast<double>(inner) / norm_a(xi, params);
    // The mean (empty-configuration) coefficient is kept even when tiny.
    if (std::fabs(c) > tail_tol || xi.empty()) out.coeff[xi] = c;
  }
  return out;
}

BasisExpansion project(const BasisExpansion& f, std::int64_t n) {
  if (n < 0) throw invalid_input("projection degree must be nonnegative");
  BasisExpansion out;
  for (const auto& [xi, c] : f.coeff)
    if (xi.size() <= n) out.coeff[xi] = c;
  return out;
}

double expansion_condition_sum(const BasisExpansion& f, const PolyParams& params) {
  long double sum = 0.0L;
  for (const auto& [xi, c] : f.coeff)
    for (const auto& [xi2, c2] : f.coeff) {
      if (xi.size() != xi2.size()) continue;
      sum += std::fabs(static_cast<long double>(c) * static_cast<long double>(c2)) *
             static_cast<long double>(norm_a(xi2, params));
    }
  return static_cast<double>(sum);
}

}  // namespace opd
