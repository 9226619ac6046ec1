// opdsim command-line front-end. Thin wrapper over the C API: parses flags,
// forwards configuration keys, maps status codes to exit codes
// (0 ok, 2 validation error, 3 numerical failure, 4 statistical FAIL).

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "opdsim.h"

namespace {

struct RunDeleter {
  void operator()(opd_run* r) const { opd_run_free(r); }
};

int finish(opd_run* run, opd_status status) {
  if (status == OPD_OK || status == OPD_ERR_STAT) {
    const char* summary = opd_run_summary(run);
    if (summary && *summary) std::printf("%s\n", summary);
    for (int i = 0; i < opd_run_file_count(run); ++i)
      std::printf("wrote %s\n", opd_run_file(run, i));
    if (status == OPD_ERR_STAT) std::printf("statistical verdict: FAIL\n");
    return static_cast<int>(status);
  }
  std::fprintf(stderr, "error: %s\n", opd_run_error(run));
  return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("opdsim ") + opd_version() +
               " - duality polynomials, exact kernels, Monte Carlo verification"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::string seed, replicas, out_dir;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--set", sets, "override one key=value")->take_all();
  app.add_option("--seed", seed, "master seed");
  app.add_option("--replicas", replicas, "Monte Carlo replica count");
  app.add_option("--out", out_dir, "output directory");

  struct Sub {
    const char* name;
    const char* help;
  };
  const std::vector<Sub> subs = {
      {"kernel", "exact transition kernel tables"},
      {"duality", "covariance identity cells: exact vs Monte Carlo"},
      {"covariance", "fluctuation-field covariance: exact vs Monte Carlo"},
      {"scaling", "rescaled covariance against the Gaussian limit"},
      {"bg-rate", "double time integral and decay-exponent fit"},
      {"lclt", "local-CLT ratio deviations and decay fit"},
      {"expand", "duality-basis expansion of a local function"},
      {"nonstationary", "inhomogeneous-profile covariance identity"},
  };
  // Per-subcommand convenience flags mapped onto config keys.
  struct Flags {
    std::string process, dim, rho, profile, field, field2, expr, t_grid, n_grid, big_t, m_window,
        box_radius, phi_radius, synthetic;
  };
  std::vector<std::shared_ptr<Flags>> flag_store;
  for (const auto& sub : subs) {
    auto* cmd = app.add_subcommand(sub.name, sub.help);
    cmd->fallthrough();  // global flags may follow the subcommand
    auto flags = std::make_shared<Flags>();
    flag_store.push_back(flags);
    cmd->add_option("--process", flags->process, "irw | sep");
    cmd->add_option("--d,--dim", flags->dim, "lattice dimension");
    cmd->add_option("--rho", flags->rho, "Poisson density");
    cmd->add_option("--profile", flags->profile, "density profile, e.g. bump(1,0.5,8)");
    cmd->add_option("--field", flags->field, "dual configuration(s), e.g. 0:2 or 0:1|0:2");
    cmd->add_option("--field2", flags->field2, "second configuration set for duality cells");
    cmd->add_option("--expr", flags->expr, "local function, e.g. eta(0)^2");
    cmd->add_option("--t", flags->t_grid, "time grid, comma separated");
    cmd->add_option("--N", flags->n_grid, "scale grid, comma separated");
    cmd->add_option("--T", flags->big_t, "double-integral horizon");
    cmd->add_option("--M", flags->m_window, "LCLT window multiplier");
    cmd->add_option("--box", flags->box_radius, "finite box radius for sep duals");
    cmd->add_option("--phi-radius", flags->phi_radius, "test function radius");
    cmd->add_option("--synthetic", flags->synthetic, "bg-rate: fit a synthetic power law N^-a");
  }

  CLI11_PARSE(app, argc, argv);

  std::unique_ptr<opd_run, RunDeleter> run(opd_run_new());
  auto apply = [&](const char* key, const std::string& value) -> bool {
    if (value.empty()) return true;
    if (opd_run_set(run.get(), key, value.c_str()) != OPD_OK) {
      std::fprintf(stderr, "error: %s\n", opd_run_error(run.get()));
      return false;
    }
    return true;
  };

  if (!config_path.empty() &&
      opd_run_load_config(run.get(), config_path.c_str()) != OPD_OK) {
    std::fprintf(stderr, "error: %s\n", opd_run_error(run.get()));
    return 2;
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    auto* cmd = app.get_subcommand(subs[i].name);
    if (!cmd->parsed()) continue;
    const auto& f = *flag_store[i];
    if (!apply("process", f.process) || !apply("dim", f.dim) || !apply("rho", f.rho) ||
        !apply("profile", f.profile) || !apply("field", f.field) || !apply("field2", f.field2) ||
        !apply("expr", f.expr) || !apply("t_grid", f.t_grid) || !apply("n_grid", f.n_grid) ||
        !apply("big_t", f.big_t) || !apply("m_window", f.m_window) ||
        !apply("box_radius", f.box_radius) || !apply("phi_radius", f.phi_radius) ||
        !apply("synthetic", f.synthetic))
      return 2;
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::fprintf(stderr, "error: --set needs key=value, got '%s'\n", kv.c_str());
        return 2;
      }
      if (!apply(kv.substr(0, eq).c_str(), kv.substr(eq + 1))) return 2;
    }
    if (!apply("seed", seed) || !apply("replicas", replicas) || !apply("out", out_dir)) return 2;
    return finish(run.get(), opd_run_execute(run.get(), subs[i].name));
  }
  return 2;
}
