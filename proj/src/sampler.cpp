#include "opdsim/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "opdsim/report.hpp"

namespace opd {

OccupationState sample_poisson_product(const PolyParams& params, const Window& window,
                                       RngStream& rng) {
  params.validate();
  OccupationState eta(window);
  for (std::size_t i = 0; i < eta.counts.size(); ++i)
    eta.counts[i] = rng.poisson(params.at(window.site_at(i)));
  return eta;
}

namespace {

struct JumpSampler {
  std::vector<double> cum;
  std::vector<Site> sites;

  explicit JumpSampler(const KernelSpec& spec) {
    double acc = 0.0;
    for (const auto& [z, p] : spec.jumps) {
      acc += p;
      cum.push_back(acc);
      sites.push_back(z);
    }
    cum.back() = 1.0;
  }
  const Site& draw(RngStream& rng) const {
    const double u = rng.uniform();
    const std::size_t i = static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    return sites[std::min(i, sites.size() - 1)];
  }
};

}  // namespace

OccupationState evolve_irw(const OccupationState& eta, double t, const KernelSpec& spec,
                           RngStream& rng) {
  if (t < 0) throw invalid_input("time must be nonnegative");
  if (t == 0) return eta;
  spec.validate();
  const JumpSampler jumps(spec);
  OccupationState out(eta.window);
  // Sites in flat order, particles in count order: a fixed consumption order
  // of the stream, independent of scheduling.
  for (std::size_t i = 0; i < eta.counts.size(); ++i) {
    const Site start = eta.window.site_at(i);
    for (std::int64_t particle = 0; particle < eta.counts[i]; ++particle) {
      Site pos = start;
      const std::int64_t njumps = rng.poisson(t);
      for (std::int64_t j = 0; j < njumps; ++j) pos = eta.window.wrap(pos + jumps.draw(rng));
      out.counts[eta.window.index(pos)] += 1;
    }
  }
  return out;
}

OccupationState evolve_sep(const OccupationState& eta, double t, const KernelSpec& spec,
                           RngStream& rng) {
  if (t < 0) throw invalid_input("time must be nonnegative");
  spec.validate();
  for (auto n : eta.counts)
    if (n > 1) throw invalid_input("exclusion input must be hardcore (at most one particle per site)");
  if (t == 0) return eta;

  // Unordered edges {x, x+z} over the positive half of the support, each with
  // an independent rate-p(z) swap clock; equivalent to directed jumps at rate
  // p(z) eta_x (1 - eta_{x+z}).
  std::vector<std::pair<Site, double>> half;
  for (const auto& [z, p] : spec.jumps) {
    bool positive = false;
    for (int i = 0; i < spec.dim; ++i) {
      if (z.c[i] > 0) {
        positive = true;
        break;
      }
      if (z.c[i] < 0) break;
    }
    if (positive) half.emplace_back(z, p);
  }
  double rate_per_site = 0.0;
  std::vector<double> cum;
  for (const auto& [z, p] : half) {
    rate_per_site += p;
    cum.push_back(rate_per_site);
  }
  const double total_rate = rate_per_site * static_cast<double>(eta.window.size());

  OccupationState state = eta;
  double clock = rng.exponential(total_rate);
  while (clock <= t) {
    // Pick the edge: site uniformly, direction by weight.
    const std::size_t si = static_cast<std::size_t>(rng.uniform_index(eta.window.size()));
    const double u = rng.uniform() * rate_per_site;
    std::size_t zi = static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    zi = std::min(zi, half.size() - 1);
    const Site a = eta.window.site_at(si);
    const std::size_t ia = si;
    const std::size_t ib = eta.window.index(a + half[zi].first);
    if (ib != ia) std::swap(state.counts[ia], state.counts[ib]);
    clock += rng.exponential(total_rate);
  }
  return state;
}

double generator_apply(const LocalFunction& f, const OccupationState& eta, const KernelSpec& spec) {
  spec.validate();
  const double f0 = f.eval(eta);
  // Only moves touching supp(f) change f: i in supp(f) + ball(range).
  std::vector<Site> sources;
  for (const Site& s : f.support()) {
    if (!eta.window.contains_unwrapped(s))
      throw invalid_input("local function support outside the window");
    for (const auto& [z, p] : spec.jumps) {
      const Site i = s - z;
      if (!eta.window.contains_unwrapped(i))
        throw invalid_input("local function support too close to the window edge");
    }
  }
  {
    std::vector<Site> seen;
    for (const Site& s : f.support()) {
      seen.push_back(s);
      for (const auto& [z, p] : spec.jumps) seen.push_back(s + z);
    }
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    sources = std::move(seen);
  }
  double acc = 0.0;
  for (const Site& i : sources) {
    const std::int64_t ni = eta.at(i);
    if (ni == 0) continue;
    for (const auto& [z, p] : spec.jumps) {
      const OccupationState moved = eta.moved(i, i + z);
      acc += p * static_cast<double>(ni) * (f.eval(moved) - f0);
    }
  }
  return acc;
}

Trajectory simulate_trajectory(const OccupationState& eta0, const std::vector<double>& times,
                               const KernelSpec& spec, Process process, std::uint64_t seed) {
  if (times.empty()) throw invalid_input("need at least one observation time");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0) throw invalid_input("times must be nonnegative");
    if (i && times[i] <= times[i - 1]) throw invalid_input("times must be strictly increasing");
  }
  Trajectory traj;
  traj.times = times;
  traj.seed = seed;
  RngStream rng(seed, 0);
  OccupationState state = eta0;
  double now = 0.0;
  const std::int64_t total = eta0.total();
  for (double t : times) {
    const double dt = t - now;
    state = (process == Process::irw) ? evolve_irw(state, dt, spec, rng)
                                      : evolve_sep(state, dt, spec, rng);
    now = t;
    if (state.total() != total) throw numeric_error("particle count drifted along the trajectory");
    traj.snapshots.push_back(state);
  }
  return traj;
}

void write_trajectory_csv(const std::string& path, const Trajectory& trajectory) {
  CsvTable table;
  const int dim = trajectory.snapshots.empty() ? 1 : trajectory.snapshots.front().window.dim;
  table.columns.push_back("time");
  for (int i = 0; i < dim; ++i) table.columns.push_back("x" + std::to_string(i + 1));
  table.columns.push_back("count");
  for (std::size_t k = 0; k < trajectory.snapshots.size(); ++k) {
    const OccupationState& eta = trajectory.snapshots[k];
    for (std::size_t idx = 0; idx < eta.counts.size(); ++idx) {
      const Site x = eta.window.site_at(idx);
      std::vector<std::string> row{format_double(trajectory.times[k])};
      for (int i = 0; i < dim; ++i) row.push_back(std::to_string(x.c[i]));
      row.push_back(std::to_string(eta.counts[idx]));
      table.add_row(std::move(row));
    }
  }
  write_csv(path, table, {{"seed", std::to_string(trajectory.seed)}});
}

int worker_count() {
  if (const char* env = std::getenv("OPDSIM_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

std::vector<MeanStderr> run_replicas_multi(
    std::int64_t replicas, std::uint64_t seed, std::size_t observables,
    const std::function<void(std::int64_t, RngStream&, std::vector<double>&)>& fill) {
  if (replicas < 1) throw invalid_input("need at least one replica");
  constexpr std::int64_t kChunk = 1024;  // fixed regardless of worker count
  const std::int64_t nchunks = (replicas + kChunk - 1) / kChunk;
  std::vector<std::vector<long double>> sum(static_cast<std::size_t>(nchunks),
                                            std::vector<long double>(observables, 0.0L));
  std::vector<std::vector<long double>> sumsq = sum;

  const int workers = std::min<std::int64_t>(worker_count(), nchunks);
  std::vector<std::thread> pool;
  std::atomic<std::int64_t> next_chunk{0};
  auto work = [&]() {
    std::vector<double> obs(observables, 0.0);
    for (;;) {
      const std::int64_t c = next_chunk.fetch_add(1);
      if (c >= nchunks) return;
      const std::int64_t lo = c * kChunk;
      const std::int64_t hi = std::min(replicas, lo + kChunk);
      for (std::int64_t r = lo; r < hi; ++r) {
        RngStream rng(seed, static_cast<std::uint64_t>(r));
        std::fill(obs.begin(), obs.end(), 0.0);
        fill(r, rng, obs);
        for (std::size_t k = 0; k < observables; ++k) {
          sum[static_cast<std::size_t>(c)][k] += obs[k];
          sumsq[static_cast<std::size_t>(c)][k] += static_cast<long double>(obs[k]) * obs[k];
        }
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  std::vector<MeanStderr> out(observables);
  for (std::size_t k = 0; k < observables; ++k) {
    long double s = 0.0L, s2 = 0.0L;
    for (std::int64_t c = 0; c < nchunks; ++c) {
      s += sum[static_cast<std::size_t>(c)][k];
      s2 += sumsq[static_cast<std::size_t>(c)][k];
    }
    const long double n = static_cast<long double>(replicas);
    const long double mean = s / n;
    const long double var = std::max(0.0L, (s2 / n - mean * mean) * n / std::max(1.0L, n - 1));
    out[k].mean = static_cast<double>(mean);
    out[k].stderr_of_mean = static_cast<double>(std::sqrt(var / n));
    out[k].n = replicas;
  }
  return out;
}

MeanStderr run_replicas(std::int64_t replicas, std::uint64_t seed,
                        const std::function<double(std::int64_t, RngStream&)>& sample) {
  auto multi = run_replicas_multi(replicas, seed, 1,
                                  [&sample](std::int64_t r, RngStream& rng, std::vector<double>& obs) {
                                    obs[0] = sample(r, rng);
                                  });
  return multi.front();
}

DualityCheckResult duality_check(const DualConfig& xi, const OccupationState& eta, double t,
                                 const KernelSpec& spec, const PolyParams& params,
                                 std::int64_t replicas, std::uint64_t seed) {
  params.validate();
  spec.validate();
  for (const auto& [s, m] : xi.mult)
    if (!eta.window.contains_unwrapped(s))
      throw invalid_input("dual configuration outside the window");

  // Exact side: sum over xi' of p_t(xi,xi') D(xi',eta) equals the free sum of
  // the labeled kernel over all destination vectors.
  const KernelTable table = rw_kernel(spec, t);
  const CoordVector from = config_to_coord(xi);
  const std::size_t k = from.size();
  double exact = 0.0;
  if (k == 0) {
    exact = 1.0;
  } else {
    const std::int64_t r = table.radius;
    std::vector<Site> dest(k, origin(spec.dim));
    // Odometer over the k destination boxes centred at the start positions.
    std::vector<std::int64_t> counter(k * static_cast<std::size_t>(spec.dim), -r);
    bool done = false;
    while (!done) {
      double p = 1.0;
      DualConfig target;
      for (std::size_t i = 0; i < k; ++i) {
        Site d(spec.dim);
        for (int c = 0; c < spec.dim; ++c) d.c[c] = counter[i * spec.dim + c];
        p *= table.at(d);
        if (p == 0.0) break;
        target.add(eta.window.wrap(from.pos[i] + d), 1);
      }
      if (p != 0.0) exact += p * duality_product(target, eta, params);
      // advance odometer
      std::size_t pos = 0;
      for (;;) {
        if (pos == counter.size()) {
          done = true;
          break;
        }
        if (++counter[pos] <= r) break;
        counter[pos] = -r;
        ++pos;
      }
    }
  }

  auto stats = run_replicas(replicas, seed, [&](std::int64_t, RngStream& rng) {
    const OccupationState evolved = evolve_irw(eta, t, spec, rng);
    return duality_product(xi, evolved, params);
  });

  DualityCheckResult res;
  res.mc_mean = stats.mean;
  res.mc_stderr = stats.stderr_of_mean;
  res.exact = exact;
  res.z = stats.stderr_of_mean > 0 ? (stats.mean - exact) / stats.stderr_of_mean : 0.0;
  return res;
}

}  // namespace opd
