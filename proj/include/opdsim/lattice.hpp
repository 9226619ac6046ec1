#pragma once

// Lattice configurations: sites of Z^d, finite dual configurations (multisets
// of sites), labeled coordinate vectors, occupation states on periodic
// windows, shifts and permutation-class combinatorics.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "opdsim/errors.hpp"

namespace opd {

inline constexpr int kMaxDim = 4;

// A point of Z^d, d <= kMaxDim. Unused coordinates stay zero so that
// comparison and hashing are dimension-agnostic.
struct Site {
  std::array<std::int64_t, kMaxDim> c{};
  int dim = 1;

  Site() = default;
  explicit Site(int d) : dim(d) {
    if (d < 1 || d > kMaxDim) throw invalid_input("site dimension out of range");
  }
  Site(std::initializer_list<std::int64_t> coords) {
    if (coords.size() < 1 || coords.size() > kMaxDim)
      throw invalid_input("site dimension out of range");
    dim = static_cast<int>(coords.size());
    int i = 0;
    for (auto v : coords) c[i++] = v;
  }

  std::int64_t operator[](int i) const { return c[i]; }
  std::int64_t& operator[](int i) { return c[i]; }

  friend bool operator==(const Site& a, const Site& b) { return a.dim == b.dim && a.c == b.c; }
  friend bool operator<(const Site& a, const Site& b) {
    if (a.dim != b.dim) return a.dim < b.dim;
    return a.c < b.c;
  }

  // Coordinatewise sum with overflow checking; coordinates never wrap silently.
  friend Site operator+(const Site& a, const Site& b) {
    if (a.dim != b.dim) throw invalid_input("site dimension mismatch");
    Site r(a.dim);
    for (int i = 0; i < a.dim; ++i)
      if (__builtin_add_overflow(a.c[i], b.c[i], &r.c[i]))
        throw numeric_error("site coordinate overflow");
    return r;
  }
  friend Site operator-(const Site& a, const Site& b) {
    if (a.dim != b.dim) throw invalid_input("site dimension mismatch");
    Site r(a.dim);
    for (int i = 0; i < a.dim; ++i)
      if (__builtin_sub_overflow(a.c[i], b.c[i], &r.c[i]))
        throw numeric_error("site coordinate overflow");
    return r;
  }
  Site operator-() const {
    Site r(dim);
    for (int i = 0; i < dim; ++i) r.c[i] = -c[i];
    return r;
  }

  double norm2() const {
    double s = 0;
    for (int i = 0; i < dim; ++i) s += static_cast<double>(c[i]) * static_cast<double>(c[i]);
    return s;
  }
  std::int64_t norm_inf() const {
    std::int64_t m = 0;
    for (int i = 0; i < dim; ++i) m = std::max(m, c[i] < 0 ? -c[i] : c[i]);
    return m;
  }

  std::string str() const;
};

Site origin(int dim);

// Periodic box [-radius, radius]^d with side L = 2*radius + 1.
struct Window {
  int dim = 1;
  std::int64_t radius = 0;

  Window() = default;
  Window(int d, std::int64_t r) : dim(d), radius(r) {
    if (d < 1 || d > kMaxDim) throw invalid_input("window dimension out of range");
    if (r < 0) throw invalid_input("window radius must be nonnegative");
  }

  std::int64_t side() const { return 2 * radius + 1; }
  std::size_t size() const {
    std::size_t s = 1;
    for (int i = 0; i < dim; ++i) s *= static_cast<std::size_t>(side());
    return s;
  }
  // Canonical representative of a site modulo the torus.
  Site wrap(const Site& s) const;
  std::size_t index(const Site& s) const;  // flat index of wrap(s)
  Site site_at(std::size_t index) const;   // inverse of index()
  bool contains_unwrapped(const Site& s) const { return s.dim == dim && s.norm_inf() <= radius; }
};

// Finite dual configuration xi: multiset of sites, ||xi|| = total multiplicity.
struct DualConfig {
  std::map<Site, std::int64_t> mult;  // only strictly positive entries stored
  std::int64_t total = 0;

  DualConfig() = default;

  void add(const Site& s, std::int64_t m = 1) {
    if (m <= 0) throw invalid_input("dual config multiplicity must be positive");
    mult[s] += m;
    total += m;
  }
  std::int64_t at(const Site& s) const {
    auto it = mult.find(s);
    return it == mult.end() ? 0 : it->second;
  }
  std::int64_t size() const { return total; }
  bool empty() const { return total == 0; }

  DualConfig shifted(const Site& z) const {
    DualConfig r;
    for (const auto& [s, m] : mult) r.add(s + z, m);
    return r;
  }

  friend bool operator==(const DualConfig& a, const DualConfig& b) { return a.mult == b.mult; }
  friend bool operator<(const DualConfig& a, const DualConfig& b) { return a.mult < b.mult; }

  std::string str() const;
};

DualConfig parse_dual_config(const std::string& text, int dim);

// Labeled k-particle coordinate vector; ordering carries labels only.
struct CoordVector {
  std::vector<Site> pos;

  CoordVector() = default;
  explicit CoordVector(std::vector<Site> p) : pos(std::move(p)) {}

  std::size_t size() const { return pos.size(); }
  int dim() const { return pos.empty() ? 1 : pos.front().dim; }

  CoordVector shifted(const Site& z) const {
    CoordVector r;
    r.pos.reserve(pos.size());
    for (const auto& s : pos) r.pos.push_back(s + z);
    return r;
  }

  friend bool operator==(const CoordVector& a, const CoordVector& b) { return a.pos == b.pos; }

  std::string str() const;
};

// Configuration xi(x) induced by forgetting labels.
DualConfig coord_to_config(const CoordVector& x);

// A fixed labeling of a dual configuration (sites in increasing order,
// repeated per multiplicity).
CoordVector config_to_coord(const DualConfig& xi);

// One representative per class of P_k(x): the distinct reorderings of the
// coordinate multiset. List length = k! / prod_i xi_i(x)!.
std::vector<CoordVector> permutation_classes(const CoordVector& x);

// k! / prod_i xi_i!, as a double (exact for k <= 20).
double permutation_class_count(const CoordVector& x);

// Occupation configuration eta on a periodic window, plus ambient density
// metadata carried along for reporting.
struct OccupationState {
  Window window;
  std::vector<std::int64_t> counts;

  OccupationState() = default;
  explicit OccupationState(const Window& w) : window(w), counts(w.size(), 0) {}

  std::int64_t at(const Site& s) const { return counts[window.index(s)]; }
  void set(const Site& s, std::int64_t n) {
    if (n < 0) throw invalid_input("occupation numbers must be nonnegative");
    counts[window.index(s)] = n;
  }
  std::int64_t total() const;

  // eta^{ij}: one particle moved from i to j. Throws if site i is empty.
  OccupationState moved(const Site& i, const Site& j) const;
};

// Density profile rho(x) > 0 on a periodic window.
struct DensityProfile {
  Window window;
  std::vector<double> rho;

  DensityProfile() = default;
  explicit DensityProfile(const Window& w, double value = 1.0) : window(w), rho(w.size(), value) {}

  double at(const Site& s) const { return rho[window.index(s)]; }
  void set(const Site& s, double v) { rho[window.index(s)] = v; }
  void validate() const {
    for (double v : rho)
      if (!(v > 0) || !std::isfinite(v)) throw invalid_input("density profile must be strictly positive and finite");
  }
};

}  // namespace opd
