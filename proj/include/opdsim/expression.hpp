#pragma once

// Local functions of the occupation variables: finite linear combinations of
// monomials in eta(x1)..eta(xm), plus a small expression parser for the CLI
// grammar: `eta(x)` atoms combined with +, -, *, integer ^, and rational
// constants (e.g. "eta(0)^2 - 3/2*eta(1) + 0.5").

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "opdsim/lattice.hpp"

namespace opd {

struct Monomial {
  double coef = 0.0;
  std::map<Site, int> powers;  // strictly positive exponents only

  int degree() const {
    int d = 0;
    for (const auto& [s, e] : powers) d += e;
    return d;
  }
};

struct LocalFunction {
  std::vector<Monomial> terms;

  int degree() const {
    int d = 0;
    for (const auto& t : terms) d = std::max(d, t.degree());
    return d;
  }
  std::vector<Site> support() const;

  double eval(const std::function<std::int64_t(const Site&)>& eta) const;
  double eval(const OccupationState& eta) const;

  LocalFunction& operator+=(const LocalFunction& o);
  LocalFunction& operator-=(const LocalFunction& o);
  LocalFunction operator*(const LocalFunction& o) const;
  LocalFunction pow(int e) const;
  void scale(double c);
  void compress();  // merge like monomials, drop zero coefficients

  static LocalFunction constant(double c);
  static LocalFunction occupation(const Site& s);  // eta(s)
};

// Throws parse_error (with position) on malformed input.
LocalFunction parse_local_function(const std::string& text, int dim);

}  // namespace opd
