#include "opdsim/markov.hpp"

#include <cmath>

#include "doctest.h"
#include "opdsim/charlier.hpp"
#include "oracles.hpp"

using namespace opd;

namespace {

Site s1(std::int64_t x) { return Site{x}; }

DualConfig delta(std::int64_t site, std::int64_t mult = 1) {
  DualConfig xi;
  xi.add(s1(site), mult);
  return xi;
}

// Wrapped single-walker kernel on a ring from the free-lattice table.
double wrapped_kernel(const KernelTable& table, std::int64_t x, std::int64_t L) {
  double p = 0.0;
  for (std::int64_t img = x - ((table.radius / L) + 1) * L; img <= table.radius; img += L)
    p += table.at(s1(img));
  return p;
}

}  // namespace

TEST_CASE("state spaces") {
  const KernelSpec nn = KernelSpec::nearest_neighbor(1);
  const Window ring(1, 5);  // 11 sites
  const FiniteGenerator sep2 = build_finite_generator(Process::sep, ring, 2, nn);
  CHECK(sep2.size() == 55);  // C(11, 2)
  const FiniteGenerator irw2 = build_finite_generator(Process::irw, ring, 2, nn);
  CHECK(irw2.size() == 66);  // C(12, 2) multisets
  CHECK_THROWS_AS(build_finite_generator(Process::sep, ring, 2, nn, 10), numeric_error);

  // Round trip state <-> configuration.
  DualConfig xi;
  xi.add(s1(-2), 1);
  xi.add(s1(3), 1);
  CHECK(sep2.state_config(sep2.state_index(xi)) == xi);
}

TEST_CASE("t = 0 gives the identity") {
  const KernelSpec nn = KernelSpec::nearest_neighbor(1);
  const FiniteGenerator gen = build_finite_generator(Process::sep, Window(1, 4), 2, nn);
  const auto kernel = finite_state_kernel(gen, 0.0);
  for (std::size_t i = 0; i < gen.size(); ++i)
    for (std::size_t j = 0; j < gen.size(); ++j)
      CHECK(kernel[i * gen.size() + j] == (i == j ? 1.0 : 0.0));
}

TEST_CASE("single particle on the ring matches the wrapped walker kernel") {
  const KernelSpec nn = KernelSpec::nearest_neighbor(1);
  const Window ring(1, 10);
  const double t = 3.0;
  const KernelTable free = rw_kernel(nn, t);
  for (Process proc : {Process::sep, Process::irw}) {
    const FiniteGenerator gen = build_finite_generator(proc, ring, 1, nn);
    const auto row = finite_state_row(gen, delta(0), t);
    for (std::int64_t x = -10; x <= 10; ++x) {
      const double expect = wrapped_kernel(free, x, ring.side());
      CHECK(row[static_cast<std::size_t>(gen.state_index(delta(x)))] ==
            doctest::Approx(expect).epsilon(1e-9));
    }
  }
}

TEST_CASE("dense kernel equals row evolution and has unit row sums") {
  const KernelSpec nn = KernelSpec::nearest_neighbor(1);
  const FiniteGenerator gen = build_finite_generator(Process::sep, Window(1, 6), 2, nn);
  const double t = 1.7;
  const auto dense = finite_state_kernel(gen, t);
  const std::size_t n = gen.size();
  for (std::size_t i = 0; i < n; i += 17) {
    const auto row = finite_state_row(gen, gen.state_config(static_cast<std::int32_t>(i)), t);
    for (std::size_t j = 0; j < n; ++j)
      CHECK(dense[i * n + j] == doctest::Approx(row[j]).epsilon(1e-9));
  }
  for (std::size_t i = 0; i < n; ++i) {
    double rs = 0.0;
    for (std::size_t j = 0; j < n; ++j) rs += dense[i * n + j];
    CHECK(rs == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("two independent dual walkers factorize over labelings") {
  const KernelSpec nn = KernelSpec::nearest_neighbor(1);
  const Window ring(1, 8);
  const FiniteGenerator gen = build_finite_generator(Process::irw, ring, 2, nn);
  const double t = 1.2;
  const auto row = finite_state_row(gen, delta(0, 2), t);
  const KernelTable free = rw_kernel(nn, t);
  // From 2 delta_0: p(2 delta_0 -> {a, b}) = 2 q(a) q(b) for a != b, q(a)^2 else.
  for (std::int64_t a = -8; a <= 8; ++a)
    for (std::int64_t b = a; b <= 8; ++b) {
      DualConfig target;
      target.add(s1(a), 1);
      target.add(s1(b), 1);
      const double qa = wrapped_kernel(free, a, ring.side());
      const double qb = wrapped_kernel(free, b, ring.side());
      const double expect = (a == b) ? qa * qb : 2.0 * qa * qb;
      CHECK(row[static_cast<std::size_t>(gen.state_index(target))] ==
            doctest::Approx(expect).epsilon(1e-8));
    }
}

TEST_CASE("detailed balance") {
  const KernelSpec nn = KernelSpec::nearest_neighbor(1);
  // SEP rates are symmetric: the kernel matrix itself is symmetric.
  const FiniteGenerator sep = build_finite_generator(Process::sep, Window(1, 5), 2, nn);
  const auto ks = finite_state_kernel(sep, 0.9);
  for (std::size_t i = 0; i < sep.size(); i += 7)
    for (std::size_t j = 0; j < sep.size(); j += 5)
      CHECK(ks[i * sep.size() + j] == doctest::Approx(ks[j * sep.size() + i]).epsilon(1e-10));

  // IRW multisets: reversible w.r.t. mu(xi) = prod 1/xi_x! = 1/a(xi) at rho=1.
  const FiniteGenerator irw = build_finite_generator(Process::irw, Window(1, 4), 2, nn);
  const auto ki = finite_state_kernel(irw, 0.9);
  PolyParams p;
  p.rho = 1.0;
  for (std::size_t i = 0; i < irw.size(); i += 5)
    for (std::size_t j = 0; j < irw.size(); j += 3) {
      const double ai = norm_a(irw.state_config(static_cast<std::int32_t>(i)), p);
      const double aj = norm_a(irw.state_config(static_cast<std::int32_t>(j)), p);
      CHECK(ki[i * irw.size() + j] * aj == doctest::Approx(ki[j * irw.size() + i] * ai).epsilon(1e-9));
    }
}

TEST_CASE("decay exponents from the free walker kernel") {
  const KernelSpec nn = KernelSpec::nearest_neighbor(1);
  // ||xi|| = 1: sup_x p_t(x) = p_t(0) ~ t^{-1/2}.
  std::vector<std::pair<double, double>> one;
  for (double t : {8.0, 16.0, 32.0, 80.0}) one.emplace_back(t, rw_kernel(nn, t).at(s1(0)));
  const DecayCheck c1 = decay_bound_check(one, 1, 1);
  CHECK(c1.fit.slope == doctest::Approx(-0.5).epsilon(0.12));
  CHECK(c1.pass);

  // ||xi|| = 2 from 2 delta_0: sup over pairs ~ t^{-1}.
  std::vector<std::pair<double, double>> two;
  for (double t : {8.0, 16.0, 32.0, 80.0}) {
    const KernelTable table = rw_kernel(nn, t);
    double sup = 0.0;
    for (std::int64_t a = -6; a <= 6; ++a)
      for (std::int64_t b = a; b <= 6; ++b) {
        DualConfig xi2;
        xi2.add(s1(a), 1);
        if (a == b)
          xi2.add(s1(a), 1);
        else
          xi2.add(s1(b), 1);
        sup = std::max(sup, config_kernel(table, delta(0, 2), xi2));
      }
    two.emplace_back(t, sup);
  }
  const DecayCheck c2 = decay_bound_check(two, 2, 1);
  CHECK(c2.fit.slope == doctest::Approx(-1.0).epsilon(0.15));
  CHECK(c2.pass);

  CHECK_THROWS_AS(decay_bound_check({{1.0, 0.5}, {2.0, 0.3}}, 1, 1), invalid_input);
  CHECK_THROWS_AS(decay_bound_check({{1.0, 0.5}, {2.0, 0.4}, {3.0, 0.3}, {4.0, 0.2}}, 1, 1),
                  invalid_input);  // less than a decade
}

TEST_CASE("SEP two-particle decay on a modest ring") {
  const KernelSpec nn = KernelSpec::nearest_neighbor(1);
  const FiniteGenerator gen = build_finite_generator(Process::sep, Window(1, 20), 2, nn);
  DualConfig start;
  start.add(s1(0), 1);
  start.add(s1(1), 1);
  std::vector<std::pair<double, double>> samples;
  for (double t : {2.0, 4.0, 8.0, 20.0}) {
    const auto row = finite_state_row(gen, start, t);
    samples.emplace_back(t, *std::max_element(row.begin(), row.end()));
  }
  const DecayCheck check = decay_bound_check(samples, 2, 1);
  CHECK(check.pass);
}
