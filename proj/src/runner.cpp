#include "opdsim/runner.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "json.hpp"
#include "opdsim/fields.hpp"
#include "opdsim/markov.hpp"
#include "opdsim/report.hpp"
#include "opdsim/sampler.hpp"

namespace opd {

namespace {

using nlohmann::json;

std::string out_path(const RunConfig& cfg, const std::string& file) {
  const std::string dir = cfg.out_dir();
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / file).string();
}

std::uint64_t cell_seed(std::uint64_t base, std::size_t index) {
  return base + 1000003ULL * static_cast<std::uint64_t>(index);
}

std::string fmt(double v) { return format_double(v); }

// CSV rows mirrored into the JSON sidecar, numeric where cells parse.
json rows_json(const CsvTable& table) {
  json rows = json::array();
  for (const auto& row : table.rows) {
    json obj;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      const std::string& cell = row[i];
      bool numeric = false;
      try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (pos == cell.size()) {
          obj[table.columns[i]] = v;
          numeric = true;
        }
      } catch (...) {
      }
      if (!numeric) obj[table.columns[i]] = cell;
    }
    rows.push_back(obj);
  }
  return rows;
}

RunOutcome cmd_kernel(const RunConfig& cfg) {
  RunOutcome out;
  const KernelSpec spec = cfg.kernel();
  json meta;
  // Exclusion duals always live on the finite box; independent walkers use
  // the free-lattice table unless a box is requested explicitly.
  const bool finite = cfg.process() == "sep" || cfg.has("box_radius");
  if (!finite) {
    // One file per time, columns (site coordinates..., probability).
    const std::vector<double> ts = cfg.t_grid();
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const KernelTable k = rw_kernel(spec, ts[i]);
      meta["truncation_error"][fmt(ts[i])] = k.truncation_error;
      CsvTable table;
      for (int c = 0; c < spec.dim; ++c) table.columns.push_back("x" + std::to_string(c + 1));
      table.columns.push_back("probability");
      const Window w(k.dim, k.radius);
      for (std::size_t idx = 0; idx < w.size(); ++idx) {
        const Site x = w.site_at(idx);
        std::vector<std::string> row;
        for (int c = 0; c < spec.dim; ++c) row.push_back(std::to_string(x.c[c]));
        row.push_back(fmt(k.at(x)));
        table.add_row(std::move(row));
      }
      auto prov = cfg.resolved();
      prov["t"] = fmt(ts[i]);
      const std::string path = out_path(cfg, "kernel_t" + std::to_string(i) + ".csv");
      write_csv(path, table, prov);
      out.files.push_back(path);
    }
  } else {
    const DualConfig start = cfg.field_configs().front();
    const Process proc = cfg.process() == "sep" ? Process::sep : Process::irw;
    const FiniteGenerator gen = build_finite_generator(
        proc, Window(cfg.dim(), cfg.box_radius()), static_cast<int>(start.size()), spec);
    CsvTable table;
    table.columns = {"t", "config", "probability"};
    for (double t : cfg.t_grid()) {
      const auto row = finite_state_row(gen, start, t);
      for (std::size_t i = 0; i < row.size(); ++i)
        table.add_row({fmt(t), gen.state_config(static_cast<std::int32_t>(i)).str(), fmt(row[i])});
    }
    meta["states"] = gen.size();
    const std::string path = out_path(cfg, "kernel.csv");
    write_csv(path, table, cfg.resolved());
    out.files.push_back(path);
  }
  const std::string jpath = out_path(cfg, "kernel.json");
  write_json(jpath, cfg.resolved(), meta.dump());
  out.files.push_back(jpath);
  out.summary = "kernel tables written";
  return out;
}

RunOutcome cmd_duality(const RunConfig& cfg) {
  RunOutcome out;
  const KernelSpec spec = cfg.kernel();
  const auto xis = cfg.field_configs();
  std::vector<DualConfig> xi2s = cfg.field2_configs();
  if (xi2s.empty()) xi2s = xis;
  CsvTable table;
  table.columns = {"xi", "xi2", "t", "exact", "mc", "stderr", "z", "pass"};
  std::size_t idx = 0, passed = 0, total = 0;
  const bool inhomogeneous = cfg.has_profile();
  for (const auto& xi : xis)
    for (const auto& xi2 : xi2s) {
      for (double t : cfg.t_grid()) {
        NonstationaryReport rep;
        if (inhomogeneous) {
          std::int64_t radius = kernel_spread_radius(spec, t, 1e-12) + 2;
          for (const auto& c : {&xi, &xi2})
            for (const auto& [s, m] : c->mult)
              radius = std::max(radius, s.norm_inf() + kernel_spread_radius(spec, t, 1e-12) + 2);
          radius = std::max(radius, cfg.profile_scale() + 2);
          rep = nonstationary_covariance_check(xi, xi2, cfg.profile(radius), t, spec,
                                               cfg.replicas(), cell_seed(cfg.seed(), idx));
        } else {
          PolyParams params;
          params.rho = cfg.rho();
          rep = stationary_duality_cell(xi, xi2, t, spec, params, cfg.replicas(),
                                        cell_seed(cfg.seed(), idx));
        }
        const bool pass = std::fabs(rep.z) <= 4.0;
        passed += pass;
        ++total;
        ++idx;
        table.add_row({xi.str(), xi2.str(), fmt(t), fmt(rep.exact), fmt(rep.mc_mean),
                       fmt(rep.mc_stderr), fmt(rep.z), pass ? "1" : "0"});
      }
    }
  const std::string path = out_path(cfg, "duality.csv");
  write_csv(path, table, cfg.resolved());
  out.files.push_back(path);
  json res;
  res["cells"] = total;
  res["passed"] = passed;
  res["rows"] = rows_json(table);
  out.stat_pass = passed == total;
  res["pass"] = out.stat_pass;
  const std::string jpath = out_path(cfg, "duality.json");
  write_json(jpath, cfg.resolved(), res.dump());
  out.files.push_back(jpath);
  std::ostringstream s;
  s << "duality: " << passed << "/" << total << " cells within 4 sigma";
  out.summary = s.str();
  return out;
}

RunOutcome cmd_covariance(const RunConfig& cfg) {
  RunOutcome out;
  const KernelSpec spec = cfg.kernel();
  const CoordVector x = cfg.field_coords();
  const TestFunction phi = cfg.phi();
  PolyParams params;
  params.rho = cfg.rho();
  const std::string descriptor = coord_to_config(x).str();
  CsvTable table;
  table.columns = {"N", "t", "exact", "mc", "stderr", "z", "pass"};
  json rows = json::array();
  std::size_t idx = 0, passed = 0, total = 0;
  for (std::int64_t N : cfg.n_grid())
    for (double t : cfg.t_grid()) {
      const double t_micro = static_cast<double>(N) * static_cast<double>(N) * t;
      const std::uint64_t seed = cell_seed(cfg.seed(), idx++);
      const double exact = exact_stationary_covariance(x, phi, N, t_micro, spec, params);
      const CovarianceReport mc =
          mc_covariance(x, phi, N, t_micro, spec, params, cfg.replicas(), seed);
      const double z = mc.stderr_of_mean > 0 ? (mc.value - exact) / mc.stderr_of_mean : 0.0;
      const bool pass = std::fabs(z) <= 4.0;
      passed += pass;
      ++total;
      table.add_row({std::to_string(N), fmt(t), fmt(exact), fmt(mc.value), fmt(mc.stderr_of_mean),
                     fmt(z), pass ? "1" : "0"});
      // One report object per method, as documented in the README.
      rows.push_back({{"field_descriptor", descriptor}, {"N", N}, {"t", t}, {"s", 0.0},
                      {"method", "exact-kernel"}, {"value", exact}, {"stderr", 0.0}});
      rows.push_back({{"field_descriptor", descriptor}, {"N", N}, {"t", t}, {"s", 0.0},
                      {"method", "monte-carlo"}, {"value", mc.value},
                      {"stderr", mc.stderr_of_mean}, {"seed", seed}});
    }
  const std::string path = out_path(cfg, "covariance.csv");
  write_csv(path, table, cfg.resolved());
  out.files.push_back(path);
  json res;
  res["cells"] = total;
  res["passed"] = passed;
  res["rows"] = rows;
  out.stat_pass = passed == total;
  res["pass"] = out.stat_pass;
  const std::string jpath = out_path(cfg, "covariance.json");
  write_json(jpath, cfg.resolved(), res.dump());
  out.files.push_back(jpath);
  out.summary = "covariance: " + std::to_string(passed) + "/" + std::to_string(total) + " cells";
  return out;
}

RunOutcome cmd_scaling(const RunConfig& cfg) {
  RunOutcome out;
  const KernelSpec spec = cfg.kernel();
  PolyParams params;
  params.rho = cfg.rho();
  const double t = cfg.t_grid().front();
  const auto rows = scaling_limit_check(cfg.field_coords(), cfg.phi(), cfg.n_grid(), t, spec, params);
  CsvTable table;
  table.columns = {"N", "rescaled", "limit", "rel_dev"};
  bool decreasing = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i && rows[i].rel_dev >= rows[i - 1].rel_dev) decreasing = false;
    table.add_row({std::to_string(rows[i].N), fmt(rows[i].rescaled), fmt(rows[i].limit),
                   fmt(rows[i].rel_dev)});
  }
  const bool small_tail = rows.back().rel_dev < 0.10;
  out.stat_pass = decreasing && small_tail;
  const std::string path = out_path(cfg, "scaling.csv");
  write_csv(path, table, cfg.resolved());
  out.files.push_back(path);
  json res;
  res["decreasing"] = decreasing;
  res["final_rel_dev"] = rows.back().rel_dev;
  res["rows"] = rows_json(table);
  res["pass"] = out.stat_pass;
  const std::string jpath = out_path(cfg, "scaling.json");
  write_json(jpath, cfg.resolved(), res.dump());
  out.files.push_back(jpath);
  std::ostringstream s;
  s << "scaling: final relative deviation " << rows.back().rel_dev;
  out.summary = s.str();
  return out;
}

RunOutcome cmd_bg_rate(const RunConfig& cfg) {
  RunOutcome out;
  const KernelSpec spec = cfg.kernel();
  PolyParams params;
  params.rho = cfg.rho();
  const CoordVector x = cfg.field_coords();
  const int k = static_cast<int>(x.size());
  const auto grid = cfg.n_grid();
  if (grid.size() < 4) throw invalid_input("bg-rate needs at least 4 N values");
  std::vector<double> values;
  const double synthetic = cfg.synthetic_exponent();
  for (std::int64_t N : grid) {
    if (synthetic > 0) {
      values.push_back(std::pow(static_cast<double>(N), -synthetic));
    } else {
      values.push_back(bg_double_integral(x, cfg.phi(), N, cfg.horizon(), spec, params));
    }
  }
  const RateFit fit = fit_bg_exponent(grid, values, k, spec.dim);
  CsvTable table;
  table.columns = {"N", "value", "log_N", "log_value"};
  for (std::size_t i = 0; i < grid.size(); ++i)
    table.add_row({std::to_string(grid[i]), fmt(values[i]), fmt(std::log(static_cast<double>(grid[i]))),
                   fmt(std::log(values[i]))});
  const std::string path = out_path(cfg, "bg_rate.csv");
  write_csv(path, table, cfg.resolved());
  out.files.push_back(path);
  json res;
  res["exponent_fit"]["slope"] = fit.fit.slope;
  res["exponent_fit"]["intercept"] = fit.fit.intercept;
  res["exponent_fit"]["residual_rms"] = fit.fit.residual_rms;
  res["exponent_fit"]["alpha"] = fit.alpha;
  res["exponent_fit"]["threshold"] = -fit.alpha + 0.15;
  res["rows"] = rows_json(table);
  res["pass"] = fit.pass;
  out.stat_pass = fit.pass;
  const std::string jpath = out_path(cfg, "bg_rate.json");
  write_json(jpath, cfg.resolved(), res.dump());
  out.files.push_back(jpath);
  std::ostringstream s;
  s << "bg-rate: slope " << fit.fit.slope << " vs -alpha " << -fit.alpha;
  out.summary = s.str();
  return out;
}

RunOutcome cmd_lclt(const RunConfig& cfg) {
  RunOutcome out;
  const KernelSpec spec = cfg.kernel();
  const auto ts = cfg.t_grid();
  if (ts.size() < 4) throw invalid_input("lclt needs a time grid with at least 4 points");
  const double M = cfg.window_multiplier();
  CsvTable table;
  table.columns = {"t", "deviation", "argmax", "deviation_sqrt_t"};
  std::vector<double> devs;
  for (double t : ts) {
    const LcltResult res = lclt_ratio(spec, t, M);
    devs.push_back(res.deviation);
    table.add_row({fmt(t), fmt(res.deviation), res.argmax.str(), fmt(res.deviation * std::sqrt(t))});
  }
  const LogLogFit fit = fit_loglog(std::vector<double>(ts.begin(), ts.end()), devs);
  out.stat_pass = fit.slope <= -0.4;
  const std::string path = out_path(cfg, "lclt.csv");
  write_csv(path, table, cfg.resolved());
  out.files.push_back(path);
  json res;
  res["exponent_fit"]["slope"] = fit.slope;
  res["exponent_fit"]["intercept"] = fit.intercept;
  res["exponent_fit"]["residual_rms"] = fit.residual_rms;
  res["exponent_fit"]["theoretical"] = -0.5;
  res["rows"] = rows_json(table);
  res["pass"] = out.stat_pass;
  const std::string jpath = out_path(cfg, "lclt.json");
  write_json(jpath, cfg.resolved(), res.dump());
  out.files.push_back(jpath);
  std::ostringstream s;
  s << "lclt: slope " << fit.slope;
  out.summary = s.str();
  return out;
}

RunOutcome cmd_expand(const RunConfig& cfg) {
  RunOutcome out;
  const std::string expr = cfg.expression();
  if (expr.empty()) throw invalid_input("expand needs expr set to a local-function expression");
  const LocalFunction f = parse_local_function(expr, cfg.dim());
  PolyParams params;
  params.rho = cfg.rho();
  const BasisExpansion e = expand_local_function(f, params);
  CsvTable table;
  table.columns = {"xi", "degree", "coefficient"};
  for (const auto& [xi, c] : e.coeff)
    table.add_row({xi.str(), std::to_string(xi.size()), fmt(c)});
  const std::string path = out_path(cfg, "expand.csv");
  write_csv(path, table, cfg.resolved());
  out.files.push_back(path);

  CsvTable proj;
  proj.columns = {"order", "xi", "coefficient"};
  for (std::int64_t n = 0; n <= e.degree(); ++n)
    for (const auto& [xi, c] : project(e, n).coeff)
      proj.add_row({std::to_string(n), xi.str(), fmt(c)});
  const std::string ppath = out_path(cfg, "expand_projections.csv");
  write_csv(ppath, proj, cfg.resolved());
  out.files.push_back(ppath);

  json res;
  res["degree"] = e.degree();
  res["mean"] = e.mean();
  res["condition_sum"] = expansion_condition_sum(e, params);
  res["coefficients"] = e.coeff.size();
  const std::string jpath = out_path(cfg, "expand.json");
  write_json(jpath, cfg.resolved(), res.dump());
  out.files.push_back(jpath);
  out.summary = "expand: " + std::to_string(e.coeff.size()) + " coefficients up to degree " +
                std::to_string(e.degree());
  return out;
}

RunOutcome cmd_nonstationary(const RunConfig& cfg) {
  RunOutcome out;
  if (!cfg.has_profile()) throw invalid_input("nonstationary needs a density profile");
  const KernelSpec spec = cfg.kernel();
  const auto xis = cfg.field_configs();
  std::vector<DualConfig> xi2s = cfg.field2_configs();
  if (xi2s.empty()) xi2s = xis;
  const std::vector<double> ts = cfg.t_grid();
  const double t_max = *std::max_element(ts.begin(), ts.end());
  std::int64_t radius = cfg.profile_scale() + kernel_spread_radius(spec, t_max, 1e-12) + 2;
  for (const std::vector<DualConfig>* set :
       std::initializer_list<const std::vector<DualConfig>*>{&xis, &xi2s})
    for (const auto& xi : *set)
      for (const auto& [s, m] : xi.mult)
        radius = std::max(radius, s.norm_inf() + kernel_spread_radius(spec, t_max, 1e-12) + 2);
  const DensityProfile rho0 = cfg.profile(radius);

  CsvTable table;
  table.columns = {"xi", "xi2", "t", "exact", "mc", "stderr", "z", "pass"};
  std::size_t idx = 0, passed = 0, total = 0;
  for (const auto& xi : xis)
    for (const auto& xi2 : xi2s) {
      for (double t : cfg.t_grid()) {
        const auto rep = nonstationary_covariance_check(xi, xi2, rho0, t, spec, cfg.replicas(),
                                                        cell_seed(cfg.seed(), idx++));
        const bool pass = std::fabs(rep.z) <= 4.0;
        passed += pass;
        ++total;
        table.add_row({xi.str(), xi2.str(), fmt(t), fmt(rep.exact), fmt(rep.mc_mean),
                       fmt(rep.mc_stderr), fmt(rep.z), pass ? "1" : "0"});
      }
    }
  const std::string path = out_path(cfg, "nonstationary.csv");
  write_csv(path, table, cfg.resolved());
  out.files.push_back(path);

  // Local-equilibrium marginals at a few probe sites.
  const std::int64_t scale = cfg.profile_scale();
  std::vector<Site> probes;
  Site p0(cfg.dim());
  probes.push_back(p0);
  Site p1(cfg.dim());
  p1.c[0] = scale / 2;
  probes.push_back(p1);
  Site p2(cfg.dim());
  p2.c[0] = scale;
  probes.push_back(p2);
  const auto rows = profile_moment_check(rho0, t_max, spec, probes, cfg.replicas(),
                                         cell_seed(cfg.seed(), 1u << 20));
  CsvTable moments;
  moments.columns = {"site", "rho_t", "z1", "z2", "z3"};
  bool moments_pass = true;
  for (const auto& row : rows) {
    moments_pass = moments_pass && std::fabs(row.z1) <= 4.0 && std::fabs(row.z2) <= 4.0 &&
                   std::fabs(row.z3) <= 4.0;
    moments.add_row({row.site.str(), fmt(row.rho_t), fmt(row.z1), fmt(row.z2), fmt(row.z3)});
  }
  const std::string mpath = out_path(cfg, "nonstationary_moments.csv");
  write_csv(mpath, moments, cfg.resolved());
  out.files.push_back(mpath);

  out.stat_pass = (passed == total) && moments_pass;
  json res;
  res["cells"] = total;
  res["passed"] = passed;
  res["moments_pass"] = moments_pass;
  res["rows"] = rows_json(table);
  res["moment_rows"] = rows_json(moments);
  res["pass"] = out.stat_pass;
  const std::string jpath = out_path(cfg, "nonstationary.json");
  write_json(jpath, cfg.resolved(), res.dump());
  out.files.push_back(jpath);
  out.summary = "nonstationary: " + std::to_string(passed) + "/" + std::to_string(total) +
                " cells, moments " + (moments_pass ? "ok" : "FAIL");
  return out;
}

}  // namespace

std::vector<std::string> subcommand_names() {
  return {"kernel", "duality", "covariance", "scaling", "bg-rate", "lclt", "expand", "nonstationary"};
}

RunOutcome run_subcommand(const std::string& name, const RunConfig& cfg) {
  if (name == "kernel") return cmd_kernel(cfg);
  if (name == "duality") return cmd_duality(cfg);
  if (name == "covariance") return cmd_covariance(cfg);
  if (name == "scaling") return cmd_scaling(cfg);
  if (name == "bg-rate") return cmd_bg_rate(cfg);
  if (name == "lclt") return cmd_lclt(cfg);
  if (name == "expand") return cmd_expand(cfg);
  if (name == "nonstationary") return cmd_nonstationary(cfg);
  throw invalid_input("unknown subcommand: " + name);
}

}  // namespace opd
