#include "opdsim/fields.hpp"

#include <cmath>

#include "doctest.h"
#include "opdsim/sampler.hpp"
#include "oracles.hpp"

using namespace opd;

namespace {

Site s1(std::int64_t x) { return Site{x}; }

DualConfig delta(std::int64_t site, std::int64_t mult = 1) {
  DualConfig xi;
  xi.add(s1(site), mult);
  return xi;
}

CoordVector at_origin(int k) {
  CoordVector x;
  for (int i = 0; i < k; ++i) x.pos.push_back(s1(0));
  return x;
}

}  // namespace

TEST_CASE("test function bump") {
  TestFunction phi = TestFunction::bump(1);
  CHECK(phi.value({0.0}) == doctest::Approx(1.0));
  CHECK(phi.value({1.1}) == 0.0);
  CHECK(phi.norm_inf() == doctest::Approx(1.0));
  CHECK(phi.norm_1() == doctest::Approx(32.0 / 35.0));
  // C^2 at the edge: value and slope vanish smoothly.
  CHECK(phi.value({0.999}) < 1e-7);

  TestFunction zero = TestFunction::bump(1, 1.0, 0.0);
  PolyParams p;
  p.rho = 1.0;
  OccupationState eta(Window(1, 16));
  CHECK(polynomial_field(at_origin(2), eta, zero, 8, p) == 0.0);
}

TEST_CASE("polynomial fields are mean zero under the stationary measure") {
  const TestFunction phi = TestFunction::bump(1);
  PolyParams p;
  p.rho = 1.0;
  const Window w(1, 16);
  const std::int64_t N = 8;
  auto stats = run_replicas(40000, 31, [&](std::int64_t, RngStream& rng) {
    const OccupationState eta = sample_poisson_product(p, w, rng);
    return polynomial_field(at_origin(2), eta, phi, N, p);
  });
  CHECK(std::fabs(stats.mean) <= 4.0 * stats.stderr_of_mean);
}

TEST_CASE("degree-1 function field equals the density fluctuation field") {
  PolyParams p;
  p.rho = 1.5;
  BasisExpansion density = expand_local_function(parse_local_function("eta(0)", 1), p);
  const TestFunction phi = TestFunction::bump(1);
  const Window w(1, 20);
  const std::int64_t N = 8;
  RngStream rng(4, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const OccupationState eta = sample_poisson_product(p, w, rng);
    // Direct density field: N^{-1/2} sum phi(x/N)(eta_x - rho).
    double direct = 0.0;
    for (std::int64_t x = -w.radius; x <= w.radius; ++x)
      direct += phi.at_site(s1(x), N) * (static_cast<double>(eta.at(s1(x))) - 1.5);
    direct /= std::sqrt(static_cast<double>(N));
    CHECK(function_field(density, eta, phi, N, p) == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("exact covariance at t = 0 collapses to the diagonal sum") {
  const KernelSpec nn = KernelSpec::nearest_neighbor(1);
  const TestFunction phi = TestFunction::bump(1);
  PolyParams p;
  p.rho = 1.0;
  const std::int64_t N = 8;
  double phi2 = 0.0;
  for (std::int64_t y = -N - 2; y <= N + 2; ++y) {
    const double v = phi.at_site(s1(y), N);
    phi2 += v * v;
  }
  const double expect = norm_a(delta(0, 2), p) * phi2;
  CHECK(exact_stationary_covariance(at_origin(2), phi, N, 0.0, nn, p) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("exact covariance matches a direct Bessel double sum") {
  const KernelSpec nn = KernelSpec::nearest_neighbor(1);
  const TestFunction phi = TestFunction::bump(1);
  PolyParams p;
  p.rho = 2.0;
  const std::int64_t N = 6;
  const double t = 2.0;

  // k = 2 at the origin: a(2 delta_0) sum phi phi q^2.
  double direct = 0.0;
  for (std::int64_t y = -N; y <= N; ++y)
    for (std::int64_t z = -N; z <= N; ++z) {
      const double q = test::bessel_kernel_1d(z - y, t);
      direct += phi.at_site(s1(y), N) * phi.at_site(s1(z), N) * q * q;
    }
  direct *= norm_a(delta(0, 2), p);
  CHECK(exact_stationary_covariance(at_origin(2), phi, N, t, nn, p) ==
        doctest::Approx(direct).epsilon(1e-9));

  // Distinct coordinates (0, 1): two permutation terms.
  CoordVector x01({s1(0), s1(1)});
  double direct2 = 0.0;
  for (std::int64_t y = -N; y <= N; ++y)
    for (std::int64_t z = -N; z <= N; ++z) {
      const double term = test::bessel_kernel_1d(z - y, t) * test::bessel_kernel_1d(z - y, t) +
                          test::bessel_kernel_1d(z - y + 1, t) * test::bessel_kernel_1d(z - y - 1, t);
      direct2 += phi.at_site(s1(y), N) * phi.at_site(s1(z), N) * term;
    }
  DualConfig xi01;
  xi01.add(s1(0), 1);
  xi01.add(s1(1), 1);
  direct2 *= norm_a(xi01, p);
  CHECK(exact_stationary_covariance(x01, phi, N, t, nn, p) == doctest::Approx(direct2).epsilon(1e-9));
}

TEST_CASE("d=2 contraction path equals the generic pair sum") {
  const KernelSpec nn2 = KernelSpec::nearest_neighbor(2);
  const TestFunction phi = TestFunction::bump(2);
  PolyParams p;
  p.rho = 1.0;
  const std::int64_t N = 4;
  const double t = 1.0;
  CoordVector x2;
  x2.pos = {Site{0, 0}, Site{0, 0}};
  const double fast = exact_stationary_covariance(x2, phi, N, t, nn2, p);
  // Direct quadruple sum with the Bessel-product oracle.
  double direct = 0.0;
  const std::int64_t w = 5;
  for (std::int64_t y1 = -w; y1 <= w; ++y1)
    for (std::int64_t y2 = -w; y2 <= w; ++y2)
      for (std::int64_t z1 = -w; z1 <= w; ++z1)
        for (std::int64_t z2 = -w; z2 <= w; ++z2) {
          const double q = test::bessel_kernel_2d(z1 - y1, z2 - y2, t);
          direct += phi.at_site(Site{y1, y2}, N) * phi.at_site(Site{z1, z2}, N) * q * q;
        }
  direct *= norm_a(coord_to_config(x2), p);
  CHECK(fast == doctest::Approx(direct).epsilon(1e-8));
}

TEST_CASE("MC covariance agrees with the exact kernel sum") {
  const KernelSpec nn = KernelSpec::nearest_neighbor(1);
  const TestFunction phi = TestFunction::bump(1);
  PolyParams p;
  p.rho = 1.0;
  const std::int64_t N = 16;
  const double t_macro = 0.5;
  const double t_micro = static_cast<double>(N * N) * t_macro;
  const double exact = exact_stationary_covariance(at_origin(2), phi, N, t_micro, nn, p);
  const CovarianceReport mc = mc_covariance(at_origin(2), phi, N, t_micro, nn, p, 4000, 99);
  CHECK(std::fabs(mc.value - exact) <= 4.0 * mc.stderr_of_mean);

  // Fixed seed reproduces the report bit for bit.
  const CovarianceReport again = mc_covariance(at_origin(2), phi, N, t_micro, nn, p, 4000, 99);
  CHECK(mc.value == again.value);
  CHECK(mc.stderr_of_mean == again.stderr_of_mean);
}

TEST_CASE("MC function-field covariance agrees with the coefficient-pair sum") {
  const KernelSpec nn = KernelSpec::nearest_neighbor(1);
  const TestFunction phi = TestFunction::bump(1);
  PolyParams p;
  p.rho = 1.0;
  const BasisExpansion f = expand_local_function(parse_local_function("eta(0)^2", 1), p);
  const std::int64_t N = 8;
  const double t = 12.0;
  // Exact covariance of the centered field: equal-degree coefficient pairs
  // against the configuration kernel (degrees 1 and 2 here; a_N = 1).
  std::int64_t halfw = 2 * (N + 2);
  KernelOptions opts;
  opts.max_radius = halfw;
  const KernelTable table = rw_kernel(nn, t, opts);
  double exact = 0.0;
  for (std::int64_t y = -N - 2; y <= N + 2; ++y)
    for (std::int64_t z = -N - 2; z <= N + 2; ++z) {
      const double w = phi.at_site(s1(y), N) * phi.at_site(s1(z), N);
      if (w == 0.0) continue;
      const double q = table.at(s1(z - y));
      const double c1 = f.at(delta(0)), c2 = f.at(delta(0, 2));
      exact += w * (c1 * c1 * norm_a(delta(0), p) * q +
                    c2 * c2 * norm_a(delta(0, 2), p) * q * q);
    }
  const CovarianceReport mc = mc_covariance(f, phi, N, t, nn, p, 20000, 17);
  CHECK(std::fabs(mc.value - exact) <= 4.0 * mc.stderr_of_mean);
}

TEST_CASE("scaling limit: rescaled covariances approach the quadrature limit") {
  const KernelSpec nn = KernelSpec::nearest_neighbor(1);
  const TestFunction phi = TestFunction::bump(1);
  PolyParams p;
  p.rho = 1.0;
  const auto rows = scaling_limit_check(at_origin(2), phi, {8, 16, 32}, 0.5, nn, p);
  CHECK(rows.size() == 3);
  CHECK(rows[1].rel_dev < rows[0].rel_dev);
  CHECK(rows[2].rel_dev < rows[1].rel_dev);
  CHECK(rows[2].rel_dev < 0.01);

  // k = 2, distinct coordinates: the limit doubles (two permutation classes).
  CoordVector x01({s1(0), s1(1)});
  DualConfig xi01;
  xi01.add(s1(0), 1);
  xi01.add(s1(1), 1);
  const double lim_pair = scaling_limit_integral(x01, phi, 0.5, nn, p);
  const double lim_same = scaling_limit_integral(at_origin(2), phi, 0.5, nn, p);
  CHECK(lim_pair == doctest::Approx(2.0 * lim_same * norm_a(xi01, p) / norm_a(delta(0, 2), p))
                        .epsilon(1e-10));
}

TEST_CASE("bg double integral: positivity, decrease, exponent fit sanity") {
  const KernelSpec nn = KernelSpec::nearest_neighbor(1);
  const TestFunction phi = TestFunction::bump(1);
  PolyParams p;
  p.rho = 1.0;
  std::vector<std::int64_t> grid{8, 16, 32, 64};
  std::vector<double> vals;
  for (auto N : grid) vals.push_back(bg_double_integral(at_origin(2), phi, N, 1.0, nn, p));
  for (std::size_t i = 0; i < vals.size(); ++i) CHECK(vals[i] > 0.0);
  for (std::size_t i = 0; i + 1 < vals.size(); ++i) CHECK(vals[i + 1] < vals[i]);
  const RateFit fit = fit_bg_exponent(grid, vals, 2, 1);
  CHECK(fit.alpha == doctest::Approx(2.0 / 3.0));
  CHECK(fit.pass);

  // Synthetic power law recovers its exponent to machine precision.
  std::vector<double> synth;
  for (auto N : grid) synth.push_back(std::pow(static_cast<double>(N), -2.0 / 3.0));
  const RateFit clean = fit_bg_exponent(grid, synth, 2, 1);
  CHECK(clean.fit.slope == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
  CHECK(clean.fit.residual_rms < 1e-12);

  // T -> 0: the integral vanishes.
  CHECK(bg_double_integral(at_origin(2), phi, 8, 1e-4, nn, p) < 1e-4);

  // Theoretical exponents.
  CHECK(bg_theoretical_exponent(2, 2) == doctest::Approx(1.0));
  CHECK(bg_theoretical_exponent(3, 2) == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("projection fields") {
  const KernelSpec nn = KernelSpec::nearest_neighbor(1);
  const TestFunction phi = TestFunction::bump(1);
  PolyParams p;
  p.rho = 1.0;

  // f in H_{k-1}: the projected field vanishes identically.
  BasisExpansion low = expand_local_function(parse_local_function("eta(0)", 1), p);
  CHECK(projection_field_covariance(low, 2, phi, 8, 4.0, nn, p) == 0.0);

  // f = eta_0^2 at rho = 1: only the 2 delta_0 coefficient survives; the
  // covariance equals the second-order field covariance times C^2 = 1.
  BasisExpansion f = expand_local_function(parse_local_function("eta(0)^2", 1), p);
  for (std::int64_t N : {8, 16}) {
    const double t = static_cast<double>(N * N) * 0.5;
    const double proj = projection_field_covariance(f, 2, phi, N, t, nn, p);
    const double second = exact_stationary_covariance(at_origin(2), phi, N, t, nn, p);
    CHECK(proj == doctest::Approx(second).epsilon(1e-10));
  }

  // Mixed degrees: cross-degree pairs are excluded by orthogonality, so
  // adding a degree-1 piece changes nothing above k = 2.
  BasisExpansion g = expand_local_function(parse_local_function("eta(0)^2 + 5*eta(0)", 1), p);
  CHECK(projection_field_covariance(g, 2, phi, 8, 32.0, nn, p) ==
        doctest::Approx(projection_field_covariance(f, 2, phi, 8, 32.0, nn, p)).epsilon(1e-10));

  // Projected-field double integral matches the direct one for the pure
  // second-order function.
  BasisExpansion pure;
  pure.coeff[delta(0, 2)] = 1.0;
  CHECK(projection_bg_double_integral(pure, 2, phi, 8, 1.0, nn, p) ==
        doctest::Approx(bg_double_integral(at_origin(2), phi, 8, 1.0, nn, p)).epsilon(1e-10));

  // The projected field obeys the same fitted-exponent rule as the raw one.
  std::vector<std::int64_t> grid{8, 16, 32, 64};
  std::vector<double> vals;
  for (auto N : grid) vals.push_back(projection_bg_double_integral(f, 2, phi, N, 1.0, nn, p));
  const RateFit fit = fit_bg_exponent(grid, vals, 2, 1);
  CHECK(fit.pass);
}

TEST_CASE("nonstationary identity: constant profile reduces to the stationary case") {
  const KernelSpec nn = KernelSpec::nearest_neighbor(1);
  Window w(1, 18);
  DensityProfile flat(w, 1.3);
  const auto rep = nonstationary_covariance_check(delta(0, 2), delta(0, 2), flat, 1.0, nn, 30000, 5);
  // Exact side: p_t(2d0, 2d0) * a(2d0) in the monic normalization.
  PolyParams p;
  p.rho = 1.3;
  const KernelTable table = rw_kernel(nn, 1.0);
  const double q0 = table.at(s1(0));
  CHECK(rep.exact == doctest::Approx(q0 * q0 * 2.0 * std::pow(1.3, 2)).epsilon(1e-10));
  CHECK(std::fabs(rep.z) <= 4.0);
}

TEST_CASE("nonstationary identity with a bump profile") {
  const KernelSpec nn = KernelSpec::nearest_neighbor(1);
  const std::int64_t N = 8;
  Window w(1, 30);
  DensityProfile rho0(w, 1.0);
  for (std::int64_t x = -w.radius; x <= w.radius; ++x) {
    const double u = static_cast<double>(x) / static_cast<double>(N);
    const double s = 1.0 - u * u;
    rho0.set(s1(x), 1.0 + (s > 0 ? 0.5 * s * s * s : 0.0));
  }
  const auto rep = nonstationary_covariance_check(delta(0), delta(0), rho0, 1.0, nn, 30000, 6);
  CHECK(std::fabs(rep.z) <= 4.0);

  // Degree 1 closed form: exact = p_t(0) rho_0(0).
  const KernelTable table = rw_kernel(nn, 1.0);
  CHECK(rep.exact == doctest::Approx(table.at(s1(0)) * rho0.at(s1(0))).epsilon(1e-10));

  const auto rep2 = nonstationary_covariance_check(delta(0, 2), delta(0, 2), rho0, 1.0, nn, 30000, 7);
  CHECK(std::fabs(rep2.z) <= 4.0);

  // Local equilibrium: marginal moments track the evolved profile.
  const auto rows = profile_moment_check(rho0, 1.0, nn, {s1(0), s1(4), s1(12)}, 30000, 8);
  for (const auto& row : rows) {
    CHECK(std::fabs(row.z1) <= 4.0);
    CHECK(std::fabs(row.z2) <= 4.0);
    CHECK(std::fabs(row.z3) <= 4.0);
  }
}

TEST_CASE("window validation") {
  const KernelSpec nn = KernelSpec::nearest_neighbor(1);
  const TestFunction phi = TestFunction::bump(1);
  PolyParams p;
  p.rho = 1.0;
  OccupationState small(Window(1, 3));
  CHECK_THROWS_AS(polynomial_field(at_origin(2), small, phi, 8, p), invalid_input);
  Window tiny(1, 4);
  DensityProfile prof(tiny, 1.0);
  CHECK_THROWS_AS(nonstationary_covariance_check(delta(0), delta(0), prof, 5.0, nn, 10, 1),
                  invalid_input);
}
