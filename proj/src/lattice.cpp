#include "opdsim/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace opd {

Site origin(int dim) { return Site(dim); }

std::string Site::str() const {
  if (dim == 1) return std::to_string(c[0]);
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < dim; ++i) {
    if (i) os << ',';
    os << c[i];
  }
  os << ')';
  return os.str();
}

Site Window::wrap(const Site& s) const {
  if (s.dim != dim) throw invalid_input("site/window dimension mismatch");
  Site r(dim);
  const std::int64_t L = side();
  for (int i = 0; i < dim; ++i) {
    std::int64_t v = (s.c[i] + radius) % L;
    if (v < 0) v += L;
    r.c[i] = v - radius;
  }
  return r;
}

std::size_t Window::index(const Site& s) const {
  Site w = wrap(s);
  std::size_t idx = 0;
  const std::int64_t L = side();
  for (int i = 0; i < dim; ++i) idx = idx * static_cast<std::size_t>(L) + static_cast<std::size_t>(w.c[i] + radius);
  return idx;
}

Site Window::site_at(std::size_t index) const {
  Site s(dim);
  const std::int64_t L = side();
  for (int i = dim - 1; i >= 0; --i) {
    s.c[i] = static_cast<std::int64_t>(index % static_cast<std::size_t>(L)) - radius;
    index /= static_cast<std::size_t>(L);
  }
  return s;
}

std::string DualConfig::str() const {
  if (mult.empty()) return "empty";
  std::ostringstream os;
  bool first = true;
  for (const auto& [s, m] : mult) {
    if (!first) os << ';';
    first = false;
    os << s.str() << ':' << m;
  }
  return os.str();
}

namespace {

Site parse_site(const std::string& text, int dim) {
  Site s(dim);
  std::string body = text;
  if (!body.empty() && body.front() == '(') {
    if (body.back() != ')') throw invalid_input("unbalanced parentheses in site '" + text + "'");
    body = body.substr(1, body.size() - 2);
  }
  std::istringstream is(body);
  std::string tok;
  int i = 0;
  while (std::getline(is, tok, ',')) {
    if (i >= dim) throw invalid_input("too many coordinates in site '" + text + "'");
    s.c[i++] = std::stoll(tok);
  }
  if (i != dim) throw invalid_input("expected " + std::to_string(dim) + " coordinates in site '" + text + "'");
  return s;
}

}  // namespace

// Format: "site:mult;site:mult", e.g. "0:2" or "(0,1):1;(2,0):2"; "empty" is
// the zero-particle configuration.
DualConfig parse_dual_config(const std::string& text, int dim) {
  DualConfig xi;
  if (text.empty() || text == "empty") return xi;
  std::istringstream is(text);
  std::string part;
  while (std::getline(is, part, ';')) {
    auto colon = part.rfind(':');
    if (colon == std::string::npos) {
      xi.add(parse_site(part, dim), 1);
    } else {
      xi.add(parse_site(part.substr(0, colon), dim), std::stoll(part.substr(colon + 1)));
    }
  }
  return xi;
}

std::string CoordVector::str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (i) os << ' ';
    os << pos[i].str();
  }
  os << ']';
  return os.str();
}

DualConfig coord_to_config(const CoordVector& x) {
  DualConfig xi;
  for (const auto& s : x.pos) xi.add(s, 1);
  return xi;
}

CoordVector config_to_coord(const DualConfig& xi) {
  CoordVector x;
  x.pos.reserve(static_cast<std::size_t>(xi.size()));
  for (const auto& [s, m] : xi.mult)
    for (std::int64_t i = 0; i < m; ++i) x.pos.push_back(s);
  return x;
}

std::vector<CoordVector> permutation_classes(const CoordVector& x) {
  if (x.size() == 0) throw invalid_input("permutation classes need at least one particle");
  std::vector<Site> sorted = x.pos;
  std::sort(sorted.begin(), sorted.end());
  std::vector<CoordVector> out;
  do {
    out.emplace_back(sorted);
  } while (std::next_permutation(sorted.begin(), sorted.end()));
  return out;
}

double permutation_class_count(const CoordVector& x) {
  const DualConfig xi = coord_to_config(x);
  double v = 1.0;
  std::int64_t filled = 0;
  // k!/prod xi_i! accumulated as a product of binomials to stay exact longer.
  for (const auto& [s, m] : xi.mult) {
    for (std::int64_t i = 1; i <= m; ++i) {
      ++filled;
      v *= static_cast<double>(filled);
      v /= static_cast<double>(i);
    }
  }
  return v;
}

std::int64_t OccupationState::total() const {
  std::int64_t t = 0;
  for (auto n : counts) t += n;
  return t;
}

OccupationState OccupationState::moved(const Site& i, const Site& j) const {
  const std::size_t ii = window.index(i);
  if (counts[ii] == 0) throw invalid_input("cannot move a particle from an empty site");
  OccupationState r = *this;
  r.counts[ii] -= 1;
  r.counts[window.index(j)] += 1;
  return r;
}

}  // namespace opd
