#include "opdsim/fields.hpp"

#include <algorithm>
#include <cmath>

#include "opdsim/sampler.hpp"

namespace opd {

TestFunction TestFunction::bump(int dim, double radius, double amplitude) {
  TestFunction phi;
  phi.dim = dim;
  phi.center.assign(static_cast<std::size_t>(dim), 0.0);
  phi.radius = radius;
  phi.amplitude = amplitude;
  return phi;
}

double TestFunction::value(const std::vector<double>& u) const {
  double r2 = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d = u[static_cast<std::size_t>(i)] - center[static_cast<std::size_t>(i)];
    r2 += d * d;
  }
  const double s = 1.0 - r2 / (radius * radius);
  return s > 0.0 ? amplitude * s * s * s : 0.0;
}

double TestFunction::at_site(const Site& x, std::int64_t N) const {
  double r2 = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d = static_cast<double>(x.c[i]) / static_cast<double>(N) -
                     center[static_cast<std::size_t>(i)];
    r2 += d * d;
  }
  const double s = 1.0 - r2 / (radius * radius);
  return s > 0.0 ? amplitude * s * s * s : 0.0;
}

double TestFunction::norm_1() const {
  // amplitude * r^d * int_{|v|<1} (1-|v|^2)^3 dv, closed form for d <= 3.
  double ball;
  switch (dim) {
    case 1: ball = 32.0 / 35.0; break;
    case 2: ball = M_PI / 4.0; break;
    case 3: ball = 64.0 * M_PI / 315.0; break;
    default: throw numeric_error("norm_1 closed form implemented for d <= 3");
  }
  return std::fabs(amplitude) * std::pow(radius, dim) * ball;
}

std::int64_t TestFunction::lattice_halfwidth(std::int64_t N) const {
  return static_cast<std::int64_t>(std::ceil(radius * static_cast<double>(N))) + 1;
}

std::int64_t TestFunction::lattice_center(int axis, std::int64_t N) const {
  return static_cast<std::int64_t>(std::llround(center[static_cast<std::size_t>(axis)] *
                                                static_cast<double>(N)));
}

namespace {

// Iterate the lattice box where phi(./N) can be nonzero.
template <typename F>
void for_phi_support(const TestFunction& phi, std::int64_t N, F&& body) {
  const std::int64_t w = phi.lattice_halfwidth(N);
  Site x(phi.dim);
  std::vector<std::int64_t> lo(static_cast<std::size_t>(phi.dim)), hi(lo.size());
  for (int i = 0; i < phi.dim; ++i) {
    lo[static_cast<std::size_t>(i)] = phi.lattice_center(i, N) - w;
    hi[static_cast<std::size_t>(i)] = phi.lattice_center(i, N) + w;
  }
  std::vector<std::int64_t> c = lo;
  for (;;) {
    for (int i = 0; i < phi.dim; ++i) x.c[i] = c[static_cast<std::size_t>(i)];
    const double p = phi.at_site(x, N);
    if (p != 0.0) body(x, p);
    int axis = 0;
    while (axis < phi.dim) {
      if (++c[static_cast<std::size_t>(axis)] <= hi[static_cast<std::size_t>(axis)]) break;
      c[static_cast<std::size_t>(axis)] = lo[static_cast<std::size_t>(axis)];
      ++axis;
    }
    if (axis == phi.dim) return;
  }
}

void require_window_fits(const TestFunction& phi, std::int64_t N, const Window& window) {
  if (window.dim != phi.dim) throw invalid_input("window/test-function dimension mismatch");
  for (int i = 0; i < phi.dim; ++i) {
    const std::int64_t hw = phi.lattice_halfwidth(N);
    const std::int64_t c = phi.lattice_center(i, N);
    if (c - hw < -window.radius || c + hw > window.radius)
      throw invalid_input("window too small for the test function at this scale");
  }
}

}  // namespace

double polynomial_field(const CoordVector& x, const OccupationState& eta, const TestFunction& phi,
                        std::int64_t N, const PolyParams& params) {
  if (N < 1) throw invalid_input("scale N must be at least 1");
  require_window_fits(phi, N, eta.window);
  const DualConfig xi = coord_to_config(x);
  long double acc = 0.0L;
  for_phi_support(phi, N, [&](const Site& z, double p) {
    DualConfig shifted;
    for (const auto& [s, m] : xi.mult) shifted.add(eta.window.wrap(s + z), m);
    acc += static_cast<long double>(p) *
           static_cast<long double>(duality_product(shifted, eta, params));
  });
  return static_cast<double>(acc);
}

double polynomial_field(const DualConfig& xi, const OccupationState& eta, const TestFunction& phi,
                        std::int64_t N, const PolyParams& params) {
  return polynomial_field(config_to_coord(xi), eta, phi, N, params);
}

double function_field(const BasisExpansion& f, const OccupationState& eta, const TestFunction& phi,
                      std::int64_t N, const PolyParams& params, bool centered) {
  if (N < 1) throw invalid_input("scale N must be at least 1");
  require_window_fits(phi, N, eta.window);
  const double a_N = (f.degree() == 1)
                         ? std::pow(static_cast<double>(N), -0.5 * static_cast<double>(phi.dim))
                         : 1.0;
  long double acc = 0.0L;
  for_phi_support(phi, N, [&](const Site& z, double p) {
    long double v = 0.0L;
    for (const auto& [xi, c] : f.coeff) {
      if (xi.empty()) {
        if (!centered) v += static_cast<long double>(c);
        continue;
      }
      DualConfig shifted;
      for (const auto& [s, m] : xi.mult) shifted.add(eta.window.wrap(s + z), m);
      v += static_cast<long double>(c) *
           static_cast<long double>(duality_product(shifted, eta, params));
    }
    acc += static_cast<long double>(p) * v;
  });
  return static_cast<double>(acc) * a_N;
}

namespace {

// phi-sample autocorrelation on the lattice (1-d): K(w) = sum_y phi(y/N) phi((y+w)/N).
std::vector<double> phi_autocorr_1d(const TestFunction& phi, std::int64_t N, std::int64_t& halfw) {
  const std::int64_t w = phi.lattice_halfwidth(N);
  const std::int64_t c = phi.lattice_center(0, N);
  std::vector<double> f(static_cast<std::size_t>(2 * w + 1));
  for (std::int64_t y = -w; y <= w; ++y) {
    Site s(1);
    s.c[0] = c + y;
    f[static_cast<std::size_t>(y + w)] = phi.at_site(s, N);
  }
  halfw = 2 * w;
  std::vector<double> K(static_cast<std::size_t>(4 * w + 1), 0.0);
  for (std::int64_t a = -w; a <= w; ++a) {
    const double fa = f[static_cast<std::size_t>(a + w)];
    if (fa == 0.0) continue;
    for (std::int64_t b = -w; b <= w; ++b)
      K[static_cast<std::size_t>(b - a + 2 * w)] += fa * f[static_cast<std::size_t>(b + w)];
  }
  return K;
}

std::int64_t coord_spread(const CoordVector& x) {
  std::int64_t m = 0;
  for (const auto& a : x.pos)
    for (const auto& b : x.pos) m = std::max(m, (a - b).norm_inf());
  return m;
}

bool all_equal_coords(const CoordVector& x) {
  for (const auto& s : x.pos)
    if (!(s == x.pos.front())) return false;
  return true;
}

// sum_sigma prod_i q(w + x^sigma_i - x_i) from a 1-d kernel table.
double perm_kernel_sum_1d(const KernelTable& table,
                          const std::vector<std::vector<std::int64_t>>& class_offsets,
                          std::int64_t w) {
  double total = 0.0;
  Site s(1);
  for (const auto& offsets : class_offsets) {
    double p = 1.0;
    for (std::int64_t off : offsets) {
      s.c[0] = w + off;
      p *= table.at(s);
      if (p == 0.0) break;
    }
    total += p;
  }
  return total;
}

std::vector<std::vector<std::int64_t>> permutation_offsets_1d(const CoordVector& x) {
  std::vector<std::vector<std::int64_t>> out;
  for (const auto& cls : permutation_classes(x)) {
    std::vector<std::int64_t> offsets;
    offsets.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      offsets.push_back(cls.pos[i].c[0] - x.pos[i].c[0]);
    out.push_back(std::move(offsets));
  }
  return out;
}

// d = 2 covariance by matrix contraction; valid for coincident coordinates
// (single permutation class, per-axis kernel powers).
double cov_2d_contraction(const TestFunction& phi, std::int64_t N, int k,
                          const KernelTable& qx, const KernelTable& qy) {
  const std::int64_t w = phi.lattice_halfwidth(N);
  const std::int64_t cx = phi.lattice_center(0, N), cy = phi.lattice_center(1, N);
  const std::size_t L = static_cast<std::size_t>(2 * w + 1);
  std::vector<double> f(L * L);
  for (std::int64_t a = -w; a <= w; ++a)
    for (std::int64_t b = -w; b <= w; ++b) {
      Site s(2);
      s.c[0] = cx + a;
      s.c[1] = cy + b;
      f[static_cast<std::size_t>(a + w) * L + static_cast<std::size_t>(b + w)] = phi.at_site(s, N);
    }
  // Per-axis lag weights g(v) = q(v)^k.
  const auto lag = [&](const KernelTable& q, std::int64_t v) {
    Site s(1);
    s.c[0] = v;
    double p = q.at(s);
    double g = 1.0;
    for (int i = 0; i < k; ++i) g *= p;
    return g;
  };
  // M1[z1, y2] = sum_{z2} f[z1, z2] g_y(z2 - y2)
  std::vector<double> m1(L * L, 0.0);
  for (std::size_t z1 = 0; z1 < L; ++z1)
    for (std::size_t y2 = 0; y2 < L; ++y2) {
      double acc = 0.0;
      for (std::size_t z2 = 0; z2 < L; ++z2) {
        const double fv = f[z1 * L + z2];
        if (fv != 0.0)
          acc += fv * lag(qy, static_cast<std::int64_t>(z2) - static_cast<std::int64_t>(y2));
      }
      m1[z1 * L + y2] = acc;
    }
  // M2[y1, y2] = sum_{z1} g_x(z1 - y1) M1[z1, y2]; result = sum f .* M2
  long double total = 0.0L;
  for (std::size_t y1 = 0; y1 < L; ++y1)
    for (std::size_t y2 = 0; y2 < L; ++y2) {
      const double fv = f[y1 * L + y2];
      if (fv == 0.0) continue;
      double acc = 0.0;
      for (std::size_t z1 = 0; z1 < L; ++z1)
        acc += lag(qx, static_cast<std::int64_t>(z1) - static_cast<std::int64_t>(y1)) *
               m1[z1 * L + y2];
      total += static_cast<long double>(fv) * acc;
    }
  return static_cast<double>(total);
}

}  // namespace

double exact_stationary_covariance(const CoordVector& x, const TestFunction& phi, std::int64_t N,
                                   double t, const KernelSpec& spec, const PolyParams& params) {
  if (t < 0) throw invalid_input("time must be nonnegative");
  if (x.size() == 0) throw invalid_input("need at least one dual particle");
  if (x.dim() != spec.dim || phi.dim != spec.dim) throw invalid_input("dimension mismatch");
  const double a = norm_a(coord_to_config(x), params);

  if (spec.dim == 1) {
    std::int64_t halfw = 0;
    const std::vector<double> K = phi_autocorr_1d(phi, N, halfw);
    const std::int64_t radius = halfw + coord_spread(x);
    KernelOptions opts;
    opts.max_radius = radius;
    const KernelTable table = rw_kernel(spec, t, opts);
    const auto offsets = permutation_offsets_1d(x);
    long double acc = 0.0L;
    for (std::int64_t w = -halfw; w <= halfw; ++w) {
      const double kw = K[static_cast<std::size_t>(w + halfw)];
      if (kw == 0.0) continue;
      acc += static_cast<long double>(kw) *
             static_cast<long double>(perm_kernel_sum_1d(table, offsets, w));
    }
    return a * static_cast<double>(acc);
  }

  if (spec.dim == 2 && all_equal_coords(x) && spec.axis_factorizable()) {
    const std::int64_t radius = 2 * phi.lattice_halfwidth(N);
    const std::vector<KernelTable> axes = {
        rw_kernel_axis(spec, 0, {t}, radius, 1e-14).front(),
        rw_kernel_axis(spec, 1, {t}, radius, 1e-14).front()};
    return a * cov_2d_contraction(phi, N, static_cast<int>(x.size()), axes[0], axes[1]);
  }

  // Generic fallback: direct pair sum over the phi support (guarded).
  const std::int64_t w = phi.lattice_halfwidth(N);
  double support_cells = 1.0;
  for (int i = 0; i < spec.dim; ++i) support_cells *= static_cast<double>(2 * w + 1);
  if (support_cells * support_cells > 4e8)
    throw numeric_error("exact covariance pair sum too large at this scale");
  KernelOptions opts;
  opts.max_radius = 2 * w + coord_spread(x);
  const KernelTable table = rw_kernel(spec, t, opts);
  const auto classes = permutation_classes(x);
  long double acc = 0.0L;
  for_phi_support(phi, N, [&](const Site& y, double py) {
    for_phi_support(phi, N, [&](const Site& z, double pz) {
      const Site d = z - y;
      double ksum = 0.0;
      for (const auto& cls : classes) ksum += labeled_kernel(table, x, cls.shifted(d));
      acc += static_cast<long double>(py) * static_cast<long double>(pz) *
             static_cast<long double>(ksum);
    });
  });
  return a * static_cast<double>(acc);
}

CovarianceReport mc_covariance(const CoordVector& x, const TestFunction& phi, std::int64_t N,
                               double t, const KernelSpec& spec, const PolyParams& params,
                               std::int64_t replicas, std::uint64_t seed) {
  if (replicas < 2) throw invalid_input("MC covariance needs at least 2 replicas");
  if (t < 0) throw invalid_input("time must be nonnegative");
  params.validate();
  std::int64_t radius = 0;
  for (int i = 0; i < phi.dim; ++i)
    radius = std::max<std::int64_t>(radius,
                                    std::llabs(phi.lattice_center(i, N)) + phi.lattice_halfwidth(N));
  for (const auto& s : x.pos) radius = std::max(radius, s.norm_inf() + phi.lattice_halfwidth(N));
  radius += kernel_spread_radius(spec, t, 1e-10) + spec.range + 1;
  const Window window(spec.dim, radius);

  auto stats = run_replicas(replicas, seed, [&](std::int64_t, RngStream& rng) {
    const OccupationState eta0 = sample_poisson_product(params, window, rng);
    const double x0 = polynomial_field(x, eta0, phi, N, params);
    const OccupationState etat = evolve_irw(eta0, t, spec, rng);
    const double xt = polynomial_field(x, etat, phi, N, params);
    return x0 * xt;
  });

  CovarianceReport rep;
  rep.value = stats.mean;
  rep.stderr_of_mean = stats.stderr_of_mean;
  rep.exact = false;
  rep.replicas = replicas;
  rep.seed = seed;
  return rep;
}

CovarianceReport mc_covariance(const BasisExpansion& f, const TestFunction& phi, std::int64_t N,
                               double t, const KernelSpec& spec, const PolyParams& params,
                               std::int64_t replicas, std::uint64_t seed) {
  if (replicas < 2) throw invalid_input("MC covariance needs at least 2 replicas");
  if (t < 0) throw invalid_input("time must be nonnegative");
  params.validate();
  std::int64_t radius = 0;
  for (int i = 0; i < phi.dim; ++i)
    radius = std::max<std::int64_t>(radius,
                                    std::llabs(phi.lattice_center(i, N)) + phi.lattice_halfwidth(N));
  for (const auto& [xi, c] : f.coeff)
    for (const auto& [s, m] : xi.mult)
      radius = std::max(radius, s.norm_inf() + phi.lattice_halfwidth(N));
  radius += kernel_spread_radius(spec, t, 1e-10) + spec.range + 1;
  const Window window(spec.dim, radius);

  auto stats = run_replicas(replicas, seed, [&](std::int64_t, RngStream& rng) {
    const OccupationState eta0 = sample_poisson_product(params, window, rng);
    const double x0 = function_field(f, eta0, phi, N, params);
    const OccupationState etat = evolve_irw(eta0, t, spec, rng);
    const double xt = function_field(f, etat, phi, N, params);
    return x0 * xt;
  });

  CovarianceReport rep;
  rep.value = stats.mean;
  rep.stderr_of_mean = stats.stderr_of_mean;
  rep.exact = false;
  rep.replicas = replicas;
  rep.seed = seed;
  return rep;
}

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(static_cast<std::size_t>(n));
  weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / static_cast<double>(j);
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    nodes[static_cast<std::size_t>(i)] = x;
    weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

}  // namespace

double scaling_limit_integral(const CoordVector& x, const TestFunction& phi, double t,
                              const KernelSpec& spec, const PolyParams& params) {
  if (!(t > 0)) throw invalid_input("scaling limit requires t > 0");
  if (!spec.axis_factorizable())
    throw numeric_error("scaling limit integral implemented for axis-aligned laws");
  const int d = spec.dim;
  const int k = static_cast<int>(x.size());
  const std::vector<double> var = spec.axis_variance();

  std::vector<double> nodes, weights;
  gauss_legendre(d == 1 ? 48 : 24, nodes, weights);
  const std::size_t m = nodes.size();

  // Tensor quadrature over (y, z) in supp(phi)^2.
  std::vector<double> lo(static_cast<std::size_t>(d)), hi(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    lo[static_cast<std::size_t>(i)] = phi.center[static_cast<std::size_t>(i)] - phi.radius;
    hi[static_cast<std::size_t>(i)] = phi.center[static_cast<std::size_t>(i)] + phi.radius;
  }
  const int vars = 2 * d;
  std::vector<std::size_t> idx(static_cast<std::size_t>(vars), 0);
  std::vector<double> y(static_cast<std::size_t>(d)), z(static_cast<std::size_t>(d));
  long double acc = 0.0L;
  for (;;) {
    double wgt = 1.0;
    for (int v = 0; v < vars; ++v) {
      const int axis = v % d;
      const double a = lo[static_cast<std::size_t>(axis)], b = hi[static_cast<std::size_t>(axis)];
      const double u = 0.5 * (a + b) + 0.5 * (b - a) * nodes[idx[static_cast<std::size_t>(v)]];
      wgt *= 0.5 * (b - a) * weights[idx[static_cast<std::size_t>(v)]];
      if (v < d)
        y[static_cast<std::size_t>(v)] = u;
      else
        z[static_cast<std::size_t>(v - d)] = u;
    }
    double g = 1.0;
    for (int axis = 0; axis < d; ++axis) {
      const double s2 = var[static_cast<std::size_t>(axis)] * t;
      const double diff = z[static_cast<std::size_t>(axis)] - y[static_cast<std::size_t>(axis)];
      g *= std::pow(2.0 * M_PI * s2, -0.5 * k) *
           std::exp(-static_cast<double>(k) * diff * diff / (2.0 * s2));
    }
    acc += static_cast<long double>(wgt) * static_cast<long double>(phi.value(y)) *
           static_cast<long double>(phi.value(z)) * static_cast<long double>(g);
    int v = 0;
    while (v < vars) {
      if (++idx[static_cast<std::size_t>(v)] < m) break;
      idx[static_cast<std::size_t>(v)] = 0;
      ++v;
    }
    if (v == vars) break;
  }
  return permutation_class_count(x) * norm_a(coord_to_config(x), params) *
         static_cast<double>(acc);
}

std::vector<ScalingRow> scaling_limit_check(const CoordVector& x, const TestFunction& phi,
                                            const std::vector<std::int64_t>& N_grid, double t,
                                            const KernelSpec& spec, const PolyParams& params) {
  if (N_grid.size() < 2) throw invalid_input("scaling check needs an increasing N grid");
  for (std::size_t i = 1; i < N_grid.size(); ++i)
    if (N_grid[i] <= N_grid[i - 1]) throw invalid_input("N grid must be strictly increasing");
  const double limit = scaling_limit_integral(x, phi, t, spec, params);
  const int k = static_cast<int>(x.size());
  std::vector<ScalingRow> rows;
  for (std::int64_t N : N_grid) {
    ScalingRow row;
    row.N = N;
    const double cov = exact_stationary_covariance(x, phi, N, static_cast<double>(N) *
                                                                   static_cast<double>(N) * t,
                                                   spec, params);
    row.rescaled = std::pow(static_cast<double>(N), static_cast<double>(spec.dim * (k - 2))) * cov;
    row.limit = limit;
    row.rel_dev = std::fabs(row.rescaled - limit) / std::fabs(limit);
    rows.push_back(row);
  }
  return rows;
}

namespace {

// Quadrature nodes on [0, T] with geometric refinement toward 0 on the scale
// u0; returns (node, weight * (T - node)) pairs for int_0^T (T-u) F(u) du.
std::vector<std::pair<double, double>> diagonal_refined_nodes(double T, double u0) {
  std::vector<double> edges{0.0};
  for (double e = std::min(u0, T); e < T; e *= 2.0) edges.push_back(e);
  edges.push_back(T);
  std::vector<double> gx, gw;
  gauss_legendre(8, gx, gw);
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double a = edges[i], b = edges[i + 1];
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t j = 0; j < gx.size(); ++j)
      out.emplace_back(mid + half * gx[j], half * gw[j] * (T - (mid + half * gx[j])));
  }
  return out;
}

}  // namespace

double bg_double_integral(const CoordVector& x, const TestFunction& phi, std::int64_t N, double T,
                          const KernelSpec& spec, const PolyParams& params) {
  if (!(T > 0)) throw invalid_input("integration horizon must be positive");
  if (x.size() == 0) throw invalid_input("need at least one dual particle");
  const int d = spec.dim;
  const double a = norm_a(coord_to_config(x), params);
  const double Nd = std::pow(static_cast<double>(N), d);
  const auto nodes = diagonal_refined_nodes(T, 1.0 / (8.0 * static_cast<double>(N * N)));
  std::vector<double> times;
  times.reserve(nodes.size());
  for (const auto& [u, wgt] : nodes) times.push_back(static_cast<double>(N) * N * u);

  if (d == 1) {
    std::int64_t halfw = 0;
    const std::vector<double> K = phi_autocorr_1d(phi, N, halfw);
    const std::int64_t radius = halfw + coord_spread(x);
    const std::vector<KernelTable> tables = rw_kernel_multi(spec, times, radius);
    const auto offsets = permutation_offsets_1d(x);
    long double acc = 0.0L;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      long double F = 0.0L;
      for (std::int64_t w = -halfw; w <= halfw; ++w) {
        const double kw = K[static_cast<std::size_t>(w + halfw)];
        if (kw == 0.0) continue;
        F += static_cast<long double>(kw) *
             static_cast<long double>(perm_kernel_sum_1d(tables[i], offsets, w));
      }
      acc += static_cast<long double>(nodes[i].second) * F;
    }
    // int int = 2 int_0^T (T-u) F(u) du by symmetry in |t - s|.
    return 2.0 * a * static_cast<double>(acc) / Nd;
  }

  if (d == 2 && all_equal_coords(x) && spec.axis_factorizable()) {
    const std::int64_t radius = 2 * phi.lattice_halfwidth(N);
    const std::vector<KernelTable> qx = rw_kernel_axis(spec, 0, times, radius, 1e-14);
    const std::vector<KernelTable> qy = rw_kernel_axis(spec, 1, times, radius, 1e-14);
    long double acc = 0.0L;
    const int k = static_cast<int>(x.size());
    for (std::size_t i = 0; i < nodes.size(); ++i)
      acc += static_cast<long double>(nodes[i].second) *
             static_cast<long double>(cov_2d_contraction(phi, N, k, qx[i], qy[i]));
    return 2.0 * a * static_cast<double>(acc) / Nd;
  }

  throw numeric_error("double integral implemented for d = 1 and coincident coordinates in d = 2");
}

double bg_theoretical_exponent(int k, int dim) {
  if (k < 2 || dim < 1) throw invalid_input("exponent defined for k >= 2, d >= 1");
  const double kd = static_cast<double>((k - 1) * dim);
  return 2.0 * kd / (2.0 + kd);
}

RateFit fit_bg_exponent(const std::vector<std::int64_t>& N_grid, const std::vector<double>& values,
                        int k, int dim, double margin) {
  if (N_grid.size() < 4) throw invalid_input("exponent fit needs at least 4 grid points");
  if (N_grid.size() != values.size()) throw invalid_input("grid/value size mismatch");
  RateFit fit;
  fit.N_grid = N_grid;
  fit.values = values;
  std::vector<double> xs;
  xs.reserve(N_grid.size());
  for (auto n : N_grid) xs.push_back(static_cast<double>(n));
  fit.fit = fit_loglog(xs, values);
  fit.alpha = bg_theoretical_exponent(k, dim);
  fit.pass = fit.fit.slope <= -fit.alpha + margin;
  return fit;
}

namespace {

// Equal-degree coefficient pairs with degree >= k, and the largest
// within-pair site spread (for table sizing).
struct ProjectionPairs {
  std::vector<std::tuple<DualConfig, DualConfig, double>> pairs;  // (xi, xi', C C' a(xi'))
  std::int64_t spread = 0;
};

ProjectionPairs projection_pairs(const BasisExpansion& f, int k, const PolyParams& params) {
  const double cond = expansion_condition_sum(f, params);
  if (!std::isfinite(cond)) throw numeric_error("expansion condition sum is not finite");
  ProjectionPairs out;
  for (const auto& [xi, c] : f.coeff) {
    if (xi.size() < k) continue;
    for (const auto& [xi2, c2] : f.coeff) {
      if (xi2.size() != xi.size()) continue;
      out.pairs.emplace_back(xi, xi2, c * c2 * norm_a(xi2, params));
      for (const auto& [s, m] : xi.mult)
        for (const auto& [s2, m2] : xi2.mult) out.spread = std::max(out.spread, (s - s2).norm_inf());
    }
  }
  return out;
}

}  // namespace

double projection_field_covariance(const BasisExpansion& f, int k, const TestFunction& phi,
                                   std::int64_t N, double t, const KernelSpec& spec,
                                   const PolyParams& params) {
  if (k < 2) throw invalid_input("projection order must be at least 2");
  if (spec.dim != 1) throw numeric_error("projection covariance implemented for d = 1");
  const ProjectionPairs pp = projection_pairs(f, k, params);
  if (pp.pairs.empty()) return 0.0;
  std::int64_t halfw = 0;
  const std::vector<double> K = phi_autocorr_1d(phi, N, halfw);
  KernelOptions opts;
  opts.max_radius = halfw + pp.spread;
  const KernelTable table = rw_kernel(spec, t, opts);
  long double acc = 0.0L;
  for (const auto& [xi, xi2, weight] : pp.pairs) {
    long double pair_sum = 0.0L;
    Site shift(1);
    for (std::int64_t w = -halfw; w <= halfw; ++w) {
      const double kw = K[static_cast<std::size_t>(w + halfw)];
      if (kw == 0.0) continue;
      shift.c[0] = w;
      pair_sum += static_cast<long double>(kw) *
                  static_cast<long double>(config_kernel(table, xi2, xi.shifted(shift)));
    }
    acc += static_cast<long double>(weight) * pair_sum;
  }
  return static_cast<double>(acc);
}

double projection_bg_double_integral(const BasisExpansion& f, int k, const TestFunction& phi,
                                     std::int64_t N, double T, const KernelSpec& spec,
                                     const PolyParams& params) {
  if (!(T > 0)) throw invalid_input("integration horizon must be positive");
  if (spec.dim != 1) throw numeric_error("projection integral implemented for d = 1");
  const ProjectionPairs pp = projection_pairs(f, k, params);
  if (pp.pairs.empty()) return 0.0;
  std::int64_t halfw = 0;
  const std::vector<double> K = phi_autocorr_1d(phi, N, halfw);
  const auto nodes = diagonal_refined_nodes(T, 1.0 / (8.0 * static_cast<double>(N * N)));
  std::vector<double> times;
  times.reserve(nodes.size());
  for (const auto& [u, wgt] : nodes) times.push_back(static_cast<double>(N) * N * u);
  const std::vector<KernelTable> tables = rw_kernel_multi(spec, times, halfw + pp.spread);
  long double acc = 0.0L;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    long double F = 0.0L;
    Site shift(1);
    for (const auto& [xi, xi2, weight] : pp.pairs) {
      long double pair_sum = 0.0L;
      for (std::int64_t w = -halfw; w <= halfw; ++w) {
        const double kw = K[static_cast<std::size_t>(w + halfw)];
        if (kw == 0.0) continue;
        shift.c[0] = w;
        pair_sum += static_cast<long double>(kw) *
                    static_cast<long double>(config_kernel(tables[i], xi2, xi.shifted(shift)));
      }
      F += static_cast<long double>(weight) * pair_sum;
    }
    acc += static_cast<long double>(nodes[i].second) * F;
  }
  return 2.0 * static_cast<double>(acc) / static_cast<double>(N);
}

NonstationaryReport stationary_duality_cell(const DualConfig& xi, const DualConfig& xi2, double t,
                                            const KernelSpec& spec, const PolyParams& params,
                                            std::int64_t replicas, std::uint64_t seed) {
  params.validate();
  if (params.profile) throw invalid_input("stationary cell takes a scalar density");
  if (t < 0) throw invalid_input("time must be nonnegative");
  const std::int64_t spread = kernel_spread_radius(spec, t, 1e-12) + spec.range + 1;
  std::int64_t radius = spread;
  for (const auto& cfg : {&xi, &xi2})
    for (const auto& [s, m] : cfg->mult) radius = std::max(radius, s.norm_inf() + spread);
  const Window window(spec.dim, radius);

  // Particle number is conserved, so p_t(xi, xi') = 0 across sizes; the MC
  // side should then vanish by orthogonality.
  const double exact =
      xi.size() == xi2.size()
          ? config_kernel(rw_kernel(spec, t), xi, xi2) * norm_a(xi2, params)
          : 0.0;

  auto stats = run_replicas(replicas, seed, [&](std::int64_t, RngStream& rng) {
    const OccupationState eta0 = sample_poisson_product(params, window, rng);
    const double d0 = duality_product(xi2, eta0, params);
    const OccupationState etat = evolve_irw(eta0, t, spec, rng);
    return d0 * duality_product(xi, etat, params);
  });

  NonstationaryReport rep;
  rep.mc_mean = stats.mean;
  rep.mc_stderr = stats.stderr_of_mean;
  rep.exact = exact;
  rep.z = stats.stderr_of_mean > 0 ? (stats.mean - exact) / stats.stderr_of_mean : 0.0;
  return rep;
}

NonstationaryReport nonstationary_covariance_check(const DualConfig& xi, const DualConfig& xi2,
                                                   const DensityProfile& rho0, double t,
                                                   const KernelSpec& spec, std::int64_t replicas,
                                                   std::uint64_t seed) {
  rho0.validate();
  if (t < 0) throw invalid_input("time must be nonnegative");
  const std::int64_t spread = kernel_spread_radius(spec, t, 1e-12);
  for (const auto& cfg : {&xi, &xi2})
    for (const auto& [s, m] : cfg->mult)
      if (s.norm_inf() + spread > rho0.window.radius)
        throw invalid_input("window too small for the requested time horizon");

  const DensityProfile rho_t = heat_evolve_profile(spec, rho0, t);
  PolyParams p0;
  p0.profile = &rho0;
  PolyParams pt;
  pt.profile = &rho_t;

  const double exact =
      xi.size() == xi2.size()
          ? config_kernel(rw_kernel(spec, t), xi, xi2) * norm_a(xi2, p0, PolyNorm::monic)
          : 0.0;

  auto stats = run_replicas(replicas, seed, [&](std::int64_t, RngStream& rng) {
    const OccupationState eta0 = sample_poisson_product(p0, rho0.window, rng);
    const double d0 = duality_product(xi2, eta0, p0, PolyNorm::monic);
    const OccupationState etat = evolve_irw(eta0, t, spec, rng);
    const double dt = duality_product(xi, etat, pt, PolyNorm::monic);
    return d0 * dt;
  });

  NonstationaryReport rep;
  rep.mc_mean = stats.mean;
  rep.mc_stderr = stats.stderr_of_mean;
  rep.exact = exact;
  rep.z = stats.stderr_of_mean > 0 ? (stats.mean - exact) / stats.stderr_of_mean : 0.0;
  return rep;
}

std::vector<MomentCheckRow> profile_moment_check(const DensityProfile& rho0, double t,
                                                 const KernelSpec& spec,
                                                 const std::vector<Site>& probes,
                                                 std::int64_t replicas, std::uint64_t seed) {
  rho0.validate();
  const DensityProfile rho_t = heat_evolve_profile(spec, rho0, t);
  PolyParams p0;
  p0.profile = &rho0;
  const std::size_t m = probes.size();

  auto stats = run_replicas_multi(
      replicas, seed, 3 * m, [&](std::int64_t, RngStream& rng, std::vector<double>& obs) {
        const OccupationState eta0 = sample_poisson_product(p0, rho0.window, rng);
        const OccupationState etat = evolve_irw(eta0, t, spec, rng);
        for (std::size_t i = 0; i < m; ++i) {
          const double n = static_cast<double>(etat.at(probes[i]));
          obs[3 * i] = n;
          obs[3 * i + 1] = n * (n - 1.0);
          obs[3 * i + 2] = n * (n - 1.0) * (n - 2.0);
        }
      });

  std::vector<MomentCheckRow> rows;
  for (std::size_t i = 0; i < m; ++i) {
    MomentCheckRow row;
    row.site = probes[i];
    row.rho_t = rho_t.at(probes[i]);
    const double e1 = row.rho_t, e2 = row.rho_t * row.rho_t, e3 = e2 * row.rho_t;
    const auto z = [](const MeanStderr& s, double expect) {
      return s.stderr_of_mean > 0 ? (s.mean - expect) / s.stderr_of_mean : 0.0;
    };
    row.z1 = z(stats[3 * i], e1);
    row.z2 = z(stats[3 * i + 1], e2);
    row.z3 = z(stats[3 * i + 2], e3);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace opd
