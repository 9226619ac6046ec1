#pragma once

// Test-only oracles, independent of the implementation paths they check.

#include <cmath>
#include <cstdint>

namespace opd::test {

// Continuous-time nearest-neighbor walk kernel in d = 1 via the Bessel
// series: p_t(x) = e^{-t} I_|x|(t). Independent of the uniformization code.
inline double bessel_kernel_1d(std::int64_t x, double t) {
  if (t == 0.0) return x == 0 ? 1.0 : 0.0;
  return std::exp(-t) * std::cyl_bessel_i(static_cast<double>(x < 0 ? -x : x), t);
}

// d = 2 NN kernel from per-axis thinning: q_{t/2}(x1) q_{t/2}(x2).
inline double bessel_kernel_2d(std::int64_t x1, std::int64_t x2, double t) {
  return bessel_kernel_1d(x1, t / 2.0) * bessel_kernel_1d(x2, t / 2.0);
}

}  // namespace opd::test
