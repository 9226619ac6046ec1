#pragma once

// Least-squares power-law fits on log-log data.

#include <cmath>
#include <vector>

#include "opdsim/errors.hpp"

namespace opd {

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
};

inline LogLogFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw invalid_input("fit needs matched samples");
  const std::size_t n = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(xs[i] > 0) || !(ys[i] > 0)) throw invalid_input("log-log fit needs positive data");
    const double lx = std::log(xs[i]), ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double dn = static_cast<double>(n);
  const double denom = dn * sxx - sx * sx;
  if (denom == 0.0) throw invalid_input("degenerate abscissae in fit");
  LogLogFit f;
  f.slope = (dn * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / dn;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = std::log(ys[i]) - (f.intercept + f.slope * std::log(xs[i]));
    rss += r * r;
  }
  f.residual_rms = std::sqrt(rss / dn);
  return f;
}

}  // namespace opd
