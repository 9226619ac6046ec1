#include "opdsim/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "opdsim/charlier.hpp"

namespace opd {

KernelSpec KernelSpec::nearest_neighbor(int dim) {
  KernelSpec s;
  s.dim = dim;
  s.range = 1;
  const double p = 1.0 / (2.0 * dim);
  for (int i = 0; i < dim; ++i) {
    Site e(dim);
    e.c[i] = 1;
    s.jumps.emplace_back(e, p);
    s.jumps.emplace_back(-e, p);
  }
  std::sort(s.jumps.begin(), s.jumps.end());
  return s;
}

double KernelSpec::at(const Site& z) const {
  for (const auto& [s, p] : jumps)
    if (s == z) return p;
  return 0.0;
}

void KernelSpec::validate() const {
  if (dim < 1 || dim > kMaxDim) throw invalid_input("kernel dimension out of range");
  if (jumps.empty()) throw invalid_input("empty jump law");
  double total = 0.0;
  std::int64_t r = 0;
  for (const auto& [z, p] : jumps) {
    if (z.dim != dim) throw invalid_input("jump site dimension mismatch");
    if (!(p > 0)) throw invalid_input("jump probabilities must be positive");
    total += p;
    r = std::max(r, z.norm_inf());
    if (std::fabs(at(-z) - p) > 1e-12) throw invalid_input("jump law must be symmetric");
  }
  if (std::fabs(total - 1.0) > 1e-12) throw invalid_input("jump law must sum to 1");
  if (r != range) throw invalid_input("declared range does not match the support");
  if (r == 0) throw invalid_input("jump law must move");

  // Irreducibility: the support must generate Z^d. Bounded BFS over sums of
  // jumps; enough in practice for finite-range laws.
  std::set<Site> closure{origin(dim)};
  const std::int64_t box = 8 * range + 8;
  for (int iter = 0; iter < 64; ++iter) {
    std::set<Site> grown = closure;
    for (const auto& s : closure)
      for (const auto& [z, p] : jumps) {
        Site n = s + z;
        if (n.norm_inf() <= box) grown.insert(n);
      }
    if (grown.size() == closure.size()) break;
    closure.swap(grown);
  }
  for (int i = 0; i < dim; ++i) {
    Site e(dim);
    e.c[i] = 1;
    if (!closure.count(e)) throw invalid_input("jump law does not generate Z^d");
  }
}

bool KernelSpec::axis_factorizable() const {
  for (const auto& [z, p] : jumps) {
    int nonzero = 0;
    for (int i = 0; i < dim; ++i)
      if (z.c[i] != 0) ++nonzero;
    if (nonzero > 1) return false;
  }
  return true;
}

std::vector<double> KernelSpec::axis_variance() const {
  std::vector<double> var(dim, 0.0);
  for (const auto& [z, p] : jumps)
    for (int i = 0; i < dim; ++i)
      var[i] += p * static_cast<double>(z.c[i]) * static_cast<double>(z.c[i]);
  return var;
}

double KernelTable::total() const {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

std::int64_t poisson_series_cutoff(double lambda, double tol) {
  if (lambda <= 0) return 0;
  // Past the mode the pmf ratio lambda/(m+1) < 1, so the upper tail is
  // geometrically dominated: sum_{m > n} pmf(m) <= pmf(n+1) / (1 - lambda/(n+2)).
  double lp = -lambda;  // log pmf at n = 0
  const double llam = std::log(lambda);
  for (std::int64_t n = 0; n < (1LL << 31); ++n) {
    const double lp_next = lp + llam - std::log(static_cast<double>(n) + 1.0);
    if (static_cast<double>(n) + 2.0 > lambda) {
      const double gap = 1.0 - lambda / (static_cast<double>(n) + 2.0);
      if (gap > 0.0 && std::exp(lp_next) / gap < tol) return n;
    }
    lp = lp_next;
  }
  throw numeric_error("poisson cutoff search failed");
}

namespace {

struct Extent {
  std::int64_t radius;
  int dim;
  std::size_t side() const { return static_cast<std::size_t>(2 * radius + 1); }
  std::size_t size() const {
    std::size_t s = 1;
    for (int i = 0; i < dim; ++i) s *= side();
    return s;
  }
  std::size_t index(const Site& x) const {
    std::size_t idx = 0;
    for (int i = 0; i < dim; ++i)
      idx = idx * side() + static_cast<std::size_t>(x.c[i] + radius);
    return idx;
  }
};

// Per-time Poisson weight window [lo, hi]: outside it the pmf contributes
// less than tol to any kernel value.
struct PoissonWindow {
  std::int64_t lo = 0, hi = 0;
  std::vector<double> pmf;  // pmf[n - lo]
  double weight(std::int64_t n) const {
    return (n < lo || n > hi) ? 0.0 : pmf[static_cast<std::size_t>(n - lo)];
  }
};

PoissonWindow poisson_window(double lambda, std::int64_t nmax, double tol) {
  PoissonWindow w;
  if (lambda <= 0) {
    w.lo = w.hi = 0;
    w.pmf = {1.0};
    return w;
  }
  const double spread = 10.0 * std::sqrt(lambda + 1.0) + 20.0;
  w.lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(lambda - spread));
  w.hi = std::min(nmax, static_cast<std::int64_t>(lambda + spread));
  w.pmf.resize(static_cast<std::size_t>(w.hi - w.lo + 1));
  for (std::int64_t n = w.lo; n <= w.hi; ++n)
    w.pmf[static_cast<std::size_t>(n - w.lo)] = poisson_pmf(lambda, n);
  (void)tol;
  return w;
}

// Shared d-dimensional convolution sweep: accumulates the Poisson-weighted
// powers of the jump law into one output table per requested time, each
// clipped to out_radius.
std::vector<KernelTable> conv_sweep(const KernelSpec& spec, const std::vector<double>& times,
                                    std::int64_t out_radius, double tail_tol) {
  const double t_max = *std::max_element(times.begin(), times.end());
  const std::int64_t nmax = poisson_series_cutoff(t_max, tail_tol);
  const std::int64_t full_radius = std::max<std::int64_t>(1, nmax * spec.range);
  const Extent full{full_radius, spec.dim};
  if (full.size() > (std::size_t{1} << 26))
    throw numeric_error(
        "uniformization table too large; use an axis-aligned law or a smaller time");

  std::vector<PoissonWindow> w;
  w.reserve(times.size());
  for (double t : times) w.push_back(poisson_window(t, nmax, tail_tol));

  const std::int64_t r_out = std::min(out_radius, full_radius);
  const Extent out{r_out, spec.dim};

  std::vector<KernelTable> tables(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    tables[i].dim = spec.dim;
    tables[i].radius = r_out;
    tables[i].t = times[i];
    tables[i].v.assign(out.size(), 0.0);
    tables[i].truncation_error = tail_tol;
  }

  std::vector<double> cur(full.size(), 0.0), next(full.size(), 0.0);
  cur[full.index(origin(spec.dim))] = 1.0;

  // Walk the power index n, convolving once per step and depositing the
  // weighted restriction into each output still interested in this n.
  std::vector<std::size_t> out_to_full(out.size());
  {
    Site x(spec.dim);
    for (std::size_t idx = 0; idx < out.size(); ++idx) {
      std::size_t rem = idx;
      for (int i = spec.dim - 1; i >= 0; --i) {
        x.c[i] = static_cast<std::int64_t>(rem % out.side()) - r_out;
        rem /= out.side();
      }
      out_to_full[idx] = full.index(x);
    }
  }

  for (std::int64_t n = 0; n <= nmax; ++n) {
    if (n > 0) {
      const std::int64_t support = std::min(full_radius, n * spec.range);
      std::fill(next.begin(), next.end(), 0.0);
      // next(x) = sum_z p(z) cur(x - z)
      if (spec.dim == 1) {
        for (std::int64_t x = -support; x <= support; ++x) {
          double acc = 0.0;
          for (const auto& [z, p] : spec.jumps) {
            const std::int64_t y = x - z.c[0];
            if (y >= -full_radius && y <= full_radius)
              acc += p * cur[static_cast<std::size_t>(y + full_radius)];
          }
          next[static_cast<std::size_t>(x + full_radius)] = acc;
        }
      } else {
        // generic d: iterate the full box once (small by the memory guard)
        Site x(spec.dim);
        for (std::size_t idx = 0; idx < full.size(); ++idx) {
          std::size_t rem = idx;
          bool in_support = true;
          for (int i = spec.dim - 1; i >= 0; --i) {
            x.c[i] = static_cast<std::int64_t>(rem % full.side()) - full_radius;
            rem /= full.side();
          }
          for (int i = 0; i < spec.dim; ++i)
            if (x.c[i] < -support || x.c[i] > support) in_support = false;
          if (!in_support) continue;
          double acc = 0.0;
          for (const auto& [z, p] : spec.jumps) {
            bool ok = true;
            Site y(spec.dim);
            for (int i = 0; i < spec.dim; ++i) {
              y.c[i] = x.c[i] - z.c[i];
              if (y.c[i] < -full_radius || y.c[i] > full_radius) ok = false;
            }
            if (ok) acc += p * cur[full.index(y)];
          }
          next[idx] = acc;
        }
      }
      cur.swap(next);
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double wt = w[i].weight(n);
      if (wt == 0.0) continue;
      auto& tv = tables[i].v;
      for (std::size_t idx = 0; idx < tv.size(); ++idx) tv[idx] += wt * cur[out_to_full[idx]];
    }
  }
  // The jump law is symmetric, so the kernel is too; enforce it exactly
  // (summation order otherwise leaves ULP-level asymmetry).
  for (auto& table : tables) {
    const std::size_t sz = table.v.size();
    for (std::size_t idx = 0; idx < sz / 2; ++idx) {
      const double avg = 0.5 * (table.v[idx] + table.v[sz - 1 - idx]);
      table.v[idx] = avg;
      table.v[sz - 1 - idx] = avg;
    }
  }
  // Clipping to out_radius excludes spatial mass on top of the Poisson tail.
  for (auto& table : tables)
    table.truncation_error = std::max(tail_tol, 1.0 - table.total());
  return tables;
}

// 1-d jump law along a single axis of a factorizable spec.
KernelSpec axis_law(const KernelSpec& spec, int axis, double& rate) {
  KernelSpec one;
  one.dim = 1;
  rate = 0.0;
  for (const auto& [z, p] : spec.jumps) {
    if (z.c[axis] == 0) continue;
    rate += p;
  }
  for (const auto& [z, p] : spec.jumps) {
    if (z.c[axis] == 0) continue;
    Site s(1);
    s.c[0] = z.c[axis];
    one.jumps.emplace_back(s, p / rate);
    one.range = std::max(one.range, std::abs(z.c[axis]));
  }
  std::sort(one.jumps.begin(), one.jumps.end());
  return one;
}

KernelTable product_table(const std::vector<KernelTable>& axes, double t, double tail_tol) {
  KernelTable out;
  out.dim = static_cast<int>(axes.size());
  out.t = t;
  out.radius = 0;
  for (const auto& a : axes) out.radius = std::max(out.radius, a.radius);
  const Extent e{out.radius, out.dim};
  out.v.assign(e.size(), 0.0);
  out.truncation_error = tail_tol * static_cast<double>(axes.size());
  Site x(out.dim);
  for (std::size_t idx = 0; idx < e.size(); ++idx) {
    std::size_t rem = idx;
    for (int i = out.dim - 1; i >= 0; --i) {
      x.c[i] = static_cast<std::int64_t>(rem % e.side()) - out.radius;
      rem /= e.side();
    }
    double p = 1.0;
    for (int i = 0; i < out.dim; ++i) {
      Site xi(1);
      xi.c[0] = x.c[i];
      p *= axes[static_cast<std::size_t>(i)].at(xi);
    }
    out.v[idx] = p;
  }
  out.truncation_error = std::max(out.truncation_error, 1.0 - out.total());
  return out;
}

}  // namespace

KernelTable rw_kernel(const KernelSpec& spec, double t, const KernelOptions& opts) {
  spec.validate();
  if (t < 0) throw invalid_input("time must be nonnegative");
  if (t == 0) {
    KernelTable delta;
    delta.dim = spec.dim;
    delta.radius = 0;
    delta.t = 0;
    delta.v = {1.0};
    delta.truncation_error = 0.0;
    return delta;
  }
  const std::int64_t natural = poisson_series_cutoff(t, opts.tail_tol) * spec.range;
  const std::int64_t radius = opts.max_radius >= 0 ? std::min(opts.max_radius, natural) : natural;
  if (spec.dim > 1 && spec.axis_factorizable()) {
    std::vector<KernelTable> axes;
    for (int i = 0; i < spec.dim; ++i) {
      double rate = 0.0;
      KernelSpec one = axis_law(spec, i, rate);
      axes.push_back(conv_sweep(one, {rate * t}, radius, opts.tail_tol).front());
    }
    return product_table(axes, t, opts.tail_tol);
  }
  return conv_sweep(spec, {t}, radius, opts.tail_tol).front();
}

std::vector<KernelTable> rw_kernel_multi(const KernelSpec& spec, const std::vector<double>& times,
                                         std::int64_t radius, double tail_tol) {
  spec.validate();
  if (times.empty()) return {};
  for (double t : times)
    if (t < 0) throw invalid_input("time must be nonnegative");
  if (spec.dim > 1 && spec.axis_factorizable()) {
    std::vector<std::vector<KernelTable>> per_axis;
    for (int i = 0; i < spec.dim; ++i) {
      double rate = 0.0;
      KernelSpec one = axis_law(spec, i, rate);
      std::vector<double> scaled;
      scaled.reserve(times.size());
      for (double t : times) scaled.push_back(rate * t);
      per_axis.push_back(conv_sweep(one, scaled, radius, tail_tol));
    }
    std::vector<KernelTable> out;
    out.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
      std::vector<KernelTable> axes;
      for (int a = 0; a < spec.dim; ++a) axes.push_back(per_axis[static_cast<std::size_t>(a)][i]);
      out.push_back(product_table(axes, times[i], tail_tol));
    }
    return out;
  }
  return conv_sweep(spec, times, radius, tail_tol);
}

std::vector<KernelTable> rw_kernel_axis(const KernelSpec& spec, int axis,
                                        const std::vector<double>& times, std::int64_t radius,
                                        double tail_tol) {
  spec.validate();
  if (!spec.axis_factorizable()) throw invalid_input("axis kernel needs an axis-aligned law");
  if (axis < 0 || axis >= spec.dim) throw invalid_input("axis out of range");
  double rate = 0.0;
  const KernelSpec one = axis_law(spec, axis, rate);
  std::vector<double> scaled;
  scaled.reserve(times.size());
  for (double t : times) {
    if (t < 0) throw invalid_input("time must be nonnegative");
    scaled.push_back(rate * t);
  }
  std::vector<KernelTable> tables = conv_sweep(one, scaled, radius, tail_tol);
  for (std::size_t i = 0; i < tables.size(); ++i) tables[i].t = times[i];
  return tables;
}

double gaussian_kernel(int dim, double t, double x_norm2) {
  if (!(t > 0)) throw invalid_input("gaussian comparison requires t > 0");
  const double d = static_cast<double>(dim);
  return std::pow(d / (2.0 * M_PI * t), d / 2.0) * std::exp(-d * x_norm2 / (2.0 * t));
}

double gaussian_kernel(int dim, double t, const Site& x) {
  return gaussian_kernel(dim, t, x.norm2());
}

double gaussian_comparison(const KernelSpec& spec, double t, const Site& x) {
  if (!(t > 0)) throw invalid_input("gaussian comparison requires t > 0");
  if (!spec.axis_factorizable())
    throw numeric_error("gaussian comparison implemented for axis-aligned laws only");
  const std::vector<double> var = spec.axis_variance();
  double p = 1.0;
  for (int i = 0; i < spec.dim; ++i) {
    const double s2 = var[static_cast<std::size_t>(i)] * t;
    p *= std::exp(-static_cast<double>(x.c[i]) * static_cast<double>(x.c[i]) / (2.0 * s2)) /
         std::sqrt(2.0 * M_PI * s2);
  }
  return p;
}

LcltResult lclt_ratio(const KernelSpec& spec, double t, double M) {
  if (!(t > 0)) throw invalid_input("lclt ratio requires t > 0");
  if (M < 0) throw invalid_input("window multiplier must be nonnegative");
  const std::int64_t r = static_cast<std::int64_t>(std::floor(M * std::sqrt(t)));
  KernelOptions opts;
  opts.max_radius = r;
  const KernelTable table = rw_kernel(spec, t, opts);
  LcltResult res;
  res.argmax = origin(spec.dim);
  const Extent e{r, spec.dim};
  Site x(spec.dim);
  for (std::size_t idx = 0; idx < e.size(); ++idx) {
    std::size_t rem = idx;
    for (int i = spec.dim - 1; i >= 0; --i) {
      x.c[i] = static_cast<std::int64_t>(rem % e.side()) - r;
      rem /= e.side();
    }
    if (x.norm2() > M * M * t) continue;
    const double dev = std::fabs(table.at(x) / gaussian_comparison(spec, t, x) - 1.0);
    if (dev > res.deviation) {
      res.deviation = dev;
      res.argmax = x;
    }
  }
  return res;
}

double labeled_kernel(const KernelTable& table, const CoordVector& from, const CoordVector& to) {
  if (from.size() != to.size()) throw invalid_input("labeled kernel needs equally many labels");
  double p = 1.0;
  for (std::size_t i = 0; i < from.size(); ++i) p *= table.at(to.pos[i] - from.pos[i]);
  return p;
}

double config_kernel(const KernelTable& table, const DualConfig& xi, const DualConfig& xi2) {
  if (xi.size() != xi2.size()) throw invalid_input("configuration kernel conserves particle number");
  if (xi.empty()) return 1.0;
  const CoordVector from = config_to_coord(xi);
  double p = 0.0;
  for (const auto& to : permutation_classes(config_to_coord(xi2)))
    p += labeled_kernel(table, from, to);
  return p;
}

std::int64_t kernel_spread_radius(const KernelSpec& spec, double t, double eps) {
  if (t < 0) throw invalid_input("time must be nonnegative");
  if (t == 0) return 0;
  return poisson_series_cutoff(t, eps) * spec.range;
}

DensityProfile heat_evolve_profile(const KernelSpec& spec, const DensityProfile& profile, double t) {
  profile.validate();
  if (t < 0) throw invalid_input("time must be nonnegative");
  if (t == 0) return profile;
  const KernelTable table = rw_kernel(spec, t);
  DensityProfile out(profile.window);
  const Extent e{table.radius, table.dim};
  for (std::size_t i = 0; i < out.rho.size(); ++i) {
    const Site x = profile.window.site_at(i);
    long double acc = 0.0L;
    Site y(spec.dim);
    for (std::size_t idx = 0; idx < e.size(); ++idx) {
      std::size_t rem = idx;
      for (int k = spec.dim - 1; k >= 0; --k) {
        y.c[k] = static_cast<std::int64_t>(rem % e.side()) - table.radius;
        rem /= e.side();
      }
      const double p = table.v[idx];
      if (p == 0.0) continue;
      acc += static_cast<long double>(p) * static_cast<long double>(profile.at(x - y));
    }
    out.rho[i] = static_cast<double>(acc);
  }
  return out;
}

}  // namespace opd
