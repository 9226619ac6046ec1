#pragma once

// Deterministic, platform-independent RNG streams. Per-replica streams are
// split off a master seed by counter hashing (SplitMix64 over
// (seed, stream index)), so parallel and serial runs agree bit for bit.
// Distributions are hand-rolled on top of the raw generator: the standard
// library leaves distribution algorithms implementation-defined.

#include <cmath>
#include <cstdint>

#include "opdsim/errors.hpp"

namespace opd {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256++ (Blackman & Vigna, public domain reference implementation).
class Xoshiro256pp {
public:
  Xoshiro256pp() : Xoshiro256pp(0) {}
  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : s_) w = splitmix64(x);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

class RngStream {
public:
  RngStream() : gen_(0) {}
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index) {
    std::uint64_t x = master_seed ^ (0x632be59bd9b4e019ULL + stream_index * 0x9e3779b97f4a7c15ULL);
    gen_ = Xoshiro256pp(splitmix64(x));
  }

  // Uniform in (0, 1) with 53 significant bits, never exactly 0 or 1.
  double uniform() {
    const double u = static_cast<double>(gen_.next() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  std::uint64_t uniform_index(std::uint64_t n) { return gen_.next() % n; }

  double exponential(double rate) {
    if (!(rate > 0)) throw invalid_input("exponential rate must be positive");
    return -std::log(uniform()) / rate;
  }

  // Exact Poisson sampling: product-of-uniforms for small means, split into
  // fixed chunks by Poisson additivity for larger ones.
  std::int64_t poisson(double mean) {
    if (mean < 0) throw invalid_input("poisson mean must be nonnegative");
    std::int64_t total = 0;
    while (mean > 48.0) {
      total += poisson_small(24.0);
      mean -= 24.0;
    }
    return total + poisson_small(mean);
  }

private:
  std::int64_t poisson_small(double mean) {
    if (mean == 0.0) return 0;
    const double threshold = std::exp(-mean);
    std::int64_t n = 0;
    double prod = uniform();
    while (prod > threshold) {
      ++n;
      prod *= uniform();
    }
    return n;
  }

  Xoshiro256pp gen_;
};

}  // namespace opd
