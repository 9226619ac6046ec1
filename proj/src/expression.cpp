#include "opdsim/expression.hpp"

#include <cctype>
#include <cmath>
#include <set>

namespace opd {

std::vector<Site> LocalFunction::support() const {
  std::set<Site> sites;
  for (const auto& t : terms)
    for (const auto& [s, e] : t.powers) sites.insert(s);
  return {sites.begin(), sites.end()};
}

double LocalFunction::eval(const std::function<std::int64_t(const Site&)>& eta) const {
  double v = 0.0;
  for (const auto& t : terms) {
    double m = t.coef;
    for (const auto& [s, e] : t.powers) {
      const double n = static_cast<double>(eta(s));
      for (int i = 0; i < e; ++i) m *= n;
    }
    v += m;
  }
  return v;
}

double LocalFunction::eval(const OccupationState& eta) const {
  return eval([&eta](const Site& s) { return eta.at(s); });
}

LocalFunction& LocalFunction::operator+=(const LocalFunction& o) {
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  compress();
  return *this;
}

LocalFunction& LocalFunction::operator-=(const LocalFunction& o) {
  LocalFunction neg = o;
  neg.scale(-1.0);
  return *this += neg;
}

LocalFunction LocalFunction::operator*(const LocalFunction& o) const {
  LocalFunction r;
  for (const auto& a : terms)
    for (const auto& b : o.terms) {
      Monomial m;
      m.coef = a.coef * b.coef;
      m.powers = a.powers;
      for (const auto& [s, e] : b.powers) m.powers[s] += e;
      r.terms.push_back(std::move(m));
    }
  r.compress();
  return r;
}

LocalFunction LocalFunction::pow(int e) const {
  if (e < 0) throw invalid_input("negative powers are not polynomial");
  LocalFunction r = constant(1.0);
  for (int i = 0; i < e; ++i) r = r * *this;
  return r;
}

void LocalFunction::scale(double c) {
  for (auto& t : terms) t.coef *= c;
}

void LocalFunction::compress() {
  std::map<std::map<Site, int>, double> merged;
  for (const auto& t : terms) merged[t.powers] += t.coef;
  terms.clear();
  for (const auto& [p, c] : merged)
    if (c != 0.0) terms.push_back(Monomial{c, p});
}

LocalFunction LocalFunction::constant(double c) {
  LocalFunction f;
  if (c != 0.0) f.terms.push_back(Monomial{c, {}});
  return f;
}

LocalFunction LocalFunction::occupation(const Site& s) {
  LocalFunction f;
  f.terms.push_back(Monomial{1.0, {{s, 1}}});
  return f;
}

namespace {

struct Parser {
  const std::string& text;
  int dim;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  [[noreturn]] void fail(const std::string& msg) { throw parse_error(msg, pos); }

  std::int64_t parse_int() {
    skip_ws();
    std::size_t start = pos;
    if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) ++pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start || (pos == start + 1 && !std::isdigit(static_cast<unsigned char>(text[start]))))
      fail("expected integer");
    return std::stoll(text.substr(start, pos - start));
  }

  double parse_number() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.')) {
      ++pos;
    }
    if (pos == start) fail("expected number");
    return std::stod(text.substr(start, pos - start));
  }

  LocalFunction parse_expr() {
    LocalFunction v = parse_term();
    for (;;) {
      if (eat('+')) {
        v += parse_term();
      } else if (eat('-')) {
        v -= parse_term();
      } else {
        return v;
      }
    }
  }

  LocalFunction parse_term() {
    LocalFunction v = parse_factor();
    for (;;) {
      if (eat('*')) {
        v = v * parse_factor();
      } else if (eat('/')) {
        LocalFunction rhs = parse_factor();
        if (rhs.degree() != 0) fail("division only by numeric constants");
        double c = rhs.terms.empty() ? 0.0 : rhs.terms.front().coef;
        if (c == 0.0) fail("division by zero");
        v.scale(1.0 / c);
      } else {
        return v;
      }
    }
  }

  LocalFunction parse_factor() {
    LocalFunction base = parse_atom();
    if (eat('^')) {
      skip_ws();
      std::int64_t e = parse_int();
      if (e < 0) fail("exponent must be a nonnegative integer");
      return base.pow(static_cast<int>(e));
    }
    return base;
  }

  LocalFunction parse_atom() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of expression");
    char c = text[pos];
    if (c == '(') {
      ++pos;
      LocalFunction v = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return v;
    }
    if (c == '-') {
      ++pos;
      LocalFunction v = parse_factor();
      v.scale(-1.0);
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return LocalFunction::constant(parse_number());
    }
    if (text.compare(pos, 3, "eta") == 0) {
      pos += 3;
      if (!eat('(')) fail("expected '(' after eta");
      Site s(dim);
      for (int i = 0; i < dim; ++i) {
        if (i && !eat(',')) fail("expected ','");
        s.c[i] = parse_int();
      }
      if (!eat(')')) fail("expected ')'");
      return LocalFunction::occupation(s);
    }
    fail("unexpected token");
  }
};

}  // namespace

LocalFunction parse_local_function(const std::string& text, int dim) {
  Parser p{text, dim};
  LocalFunction f = p.parse_expr();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  f.compress();
  return f;
}

}  // namespace opd
