#include "opdsim/markov.hpp"

#include <algorithm>
#include <cmath>

#include "opdsim/charlier.hpp"

namespace opd {

namespace {

void enumerate_states(std::int64_t sites, int remaining, bool hardcore,
                      std::vector<std::int16_t>& cur,
                      std::vector<std::vector<std::int16_t>>& out, std::size_t max_states) {
  const std::int64_t left = sites - static_cast<std::int64_t>(cur.size());
  if (left == 0) {
    if (remaining == 0) {
      out.push_back(cur);
      if (out.size() > max_states) throw numeric_error("dual state space exceeds the configured cap");
    }
    return;
  }
  if (hardcore && remaining > left) return;  // cannot place the rest
  const int cap = hardcore ? std::min(remaining, 1) : remaining;
  for (int n = 0; n <= cap; ++n) {
    cur.push_back(static_cast<std::int16_t>(n));
    enumerate_states(sites, remaining - n, hardcore, cur, out, max_states);
    cur.pop_back();
  }
}

}  // namespace

std::int32_t FiniteGenerator::state_index(const DualConfig& xi) const {
  if (xi.size() != particles) throw invalid_input("configuration has the wrong particle count");
  std::vector<std::int16_t> occ(window.size(), 0);
  for (const auto& [s, m] : xi.mult) occ[window.index(s)] += static_cast<std::int16_t>(m);
  auto it = std::lower_bound(states.begin(), states.end(), occ);
  if (it == states.end() || *it != occ) throw invalid_input("configuration not in the state space");
  return static_cast<std::int32_t>(it - states.begin());
}

DualConfig FiniteGenerator::state_config(std::int32_t idx) const {
  DualConfig xi;
  const auto& occ = states[static_cast<std::size_t>(idx)];
  for (std::size_t i = 0; i < occ.size(); ++i)
    if (occ[i] > 0) xi.add(window.site_at(i), occ[i]);
  return xi;
}

FiniteGenerator build_finite_generator(Process process, const Window& window, int particles,
                                       const KernelSpec& spec, std::size_t max_states) {
  spec.validate();
  if (window.dim != spec.dim) throw invalid_input("window/kernel dimension mismatch");
  if (particles < 1) throw invalid_input("need at least one dual particle");
  FiniteGenerator gen;
  gen.process = process;
  gen.window = window;
  gen.particles = particles;

  std::vector<std::int16_t> cur;
  enumerate_states(static_cast<std::int64_t>(window.size()), particles, process == Process::sep,
                   cur, gen.states, max_states);
  if (gen.states.empty()) throw invalid_input("no states: too many exclusion particles for the box");

  gen.rows.resize(gen.states.size());
  gen.exit_rate.assign(gen.states.size(), 0.0);
  for (std::size_t si = 0; si < gen.states.size(); ++si) {
    const auto& occ = gen.states[si];
    for (std::size_t i = 0; i < occ.size(); ++i) {
      if (occ[i] == 0) continue;
      const Site from = window.site_at(i);
      for (const auto& [z, p] : spec.jumps) {
        const std::size_t j = window.index(from + z);
        if (j == i) continue;  // wrap onto itself: a no-op on small boxes
        if (process == Process::sep && occ[j] >= 1) continue;
        const double rate = static_cast<double>(occ[i]) * p;
        std::vector<std::int16_t> to = occ;
        to[i] -= 1;
        to[j] += 1;
        auto it = std::lower_bound(gen.states.begin(), gen.states.end(), to);
        gen.rows[si].emplace_back(static_cast<std::int32_t>(it - gen.states.begin()), rate);
        gen.exit_rate[si] += rate;
      }
    }
  }
  return gen;
}

namespace {

// One uniformization step: out = v P with P = I + Q/lambda.
void apply_uniformized(const FiniteGenerator& gen, double lambda, const std::vector<double>& v,
                       std::vector<double>& out) {
  const std::size_t n = gen.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = v[i] * (1.0 - gen.exit_rate[i] / lambda);
  for (std::size_t i = 0; i < n; ++i) {
    const double vi = v[i];
    if (vi == 0.0) continue;
    for (const auto& [j, rate] : gen.rows[i]) out[static_cast<std::size_t>(j)] += vi * rate / lambda;
  }
}

double max_exit(const FiniteGenerator& gen) {
  double m = 0.0;
  for (double e : gen.exit_rate) m = std::max(m, e);
  return m;
}

}  // namespace

std::vector<double> finite_state_row(const FiniteGenerator& gen, const DualConfig& from, double t) {
  if (t < 0) throw invalid_input("time must be nonnegative");
  const std::size_t n = gen.size();
  std::vector<double> v(n, 0.0);
  v[static_cast<std::size_t>(gen.state_index(from))] = 1.0;
  if (t == 0) return v;
  const double lambda = std::max(max_exit(gen), 1e-12);
  const std::int64_t nmax = poisson_series_cutoff(lambda * t, 1e-14);
  std::vector<double> out(n, 0.0), next(n, 0.0);
  double lw = -lambda * t;  // log Poisson weight at m = 0
  for (std::int64_t m = 0; m <= nmax; ++m) {
    const double w = std::exp(lw);
    for (std::size_t i = 0; i < n; ++i) out[i] += w * v[i];
    apply_uniformized(gen, lambda, v, next);
    v.swap(next);
    lw += std::log(lambda * t) - std::log(static_cast<double>(m) + 1.0);
  }
  return out;
}

std::vector<double> finite_state_kernel(const FiniteGenerator& gen, double t) {
  if (t < 0) throw invalid_input("time must be nonnegative");
  const std::size_t n = gen.size();
  if (n > 3000) throw numeric_error("dense kernel limited to 3000 states; use finite_state_row");
  std::vector<double> result(n * n, 0.0);
  if (t == 0) {
    for (std::size_t i = 0; i < n; ++i) result[i * n + i] = 1.0;
    return result;
  }
  const double lambda = std::max(max_exit(gen), 1e-12);
  // Scaling and squaring: evaluate the uniformized series at tau = t / 2^s
  // with lambda * tau <= 1, then square s times.
  int s = 0;
  double tau = t;
  while (lambda * tau > 1.0) {
    tau *= 0.5;
    ++s;
  }
  const std::int64_t nmax = poisson_series_cutoff(lambda * tau, 1e-16);
  // result = sum_m pois(lambda tau, m) P^m, built row-block by row-block.
  std::vector<double> v(n, 0.0), next(n, 0.0);
  for (std::size_t row = 0; row < n; ++row) {
    std::fill(v.begin(), v.end(), 0.0);
    v[row] = 1.0;
    double lw = -lambda * tau;
    double* out = result.data() + row * n;
    for (std::int64_t m = 0; m <= nmax; ++m) {
      const double w = std::exp(lw);
      for (std::size_t i = 0; i < n; ++i) out[i] += w * v[i];
      apply_uniformized(gen, lambda, v, next);
      v.swap(next);
      lw += std::log(lambda * tau) - std::log(static_cast<double>(m) + 1.0);
    }
  }
  std::vector<double> tmp(n * n, 0.0);
  for (int step = 0; step < s; ++step) {
    std::fill(tmp.begin(), tmp.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) {
        const double a = result[i * n + k];
        if (a == 0.0) continue;
        const double* brow = result.data() + k * n;
        double* trow = tmp.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) trow[j] += a * brow[j];
      }
    result.swap(tmp);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double rs = 0.0;
    for (std::size_t j = 0; j < n; ++j) rs += result[i * n + j];
    if (std::fabs(rs - 1.0) > 1e-10) throw numeric_error("matrix exponential row sum off by more than 1e-10");
  }
  return result;
}

DecayCheck decay_bound_check(const std::vector<std::pair<double, double>>& t_sup, int particles,
                             int dim, double margin) {
  if (t_sup.size() < 4) throw invalid_input("decay fit needs at least 4 time points");
  double tmin = t_sup.front().first, tmax = t_sup.front().first;
  for (const auto& [t, s] : t_sup) {
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
  }
  if (tmax < 10.0 * tmin) throw invalid_input("decay fit needs a time grid spanning a decade");
  std::vector<double> xs, ys;
  for (const auto& [t, s] : t_sup) {
    xs.push_back(1.0 + t);
    ys.push_back(s);
  }
  DecayCheck check;
  check.samples = t_sup;
  check.fit = fit_loglog(xs, ys);
  check.threshold = -static_cast<double>(particles) * static_cast<double>(dim) / 2.0 + margin;
  check.pass = check.fit.slope <= check.threshold;
  return check;
}

}  // namespace opd
