#include "opdsim.h"

#include <string>
#include <vector>

#include "opdsim/charlier.hpp"
#include "opdsim/kernels.hpp"
#include "opdsim/report.hpp"
#include "opdsim/runconfig.hpp"
#include "opdsim/runner.hpp"

struct opd_run {
  opd::RunConfig config;
  opd::RunOutcome outcome;
  std::string error;
  std::string summary;
};

namespace {

// Maps the C++ error taxonomy onto status codes at the library boundary.
template <typename F>
opd_status guarded(std::string* error, F&& f) {
  try {
    if (error) error->clear();
    return f();
  } catch (const opd::invalid_input& e) {
    if (error) *error = e.what();
    return OPD_ERR_INVALID;
  } catch (const opd::numeric_error& e) {
    if (error) *error = e.what();
    return OPD_ERR_NUMERIC;
  } catch (const std::exception& e) {
    if (error) *error = e.what();
    return OPD_ERR_NUMERIC;
  }
}

}  // namespace

extern "C" {

const char* opd_version(void) { return opd::kVersion; }

opd_run* opd_run_new(void) { return new opd_run(); }

void opd_run_free(opd_run* run) { delete run; }

opd_status opd_run_set(opd_run* run, const char* key, const char* value) {
  if (!run || !key || !value) return OPD_ERR_INVALID;
  return guarded(&run->error, [&] {
    run->config.set(key, value);
    return OPD_OK;
  });
}

opd_status opd_run_load_config(opd_run* run, const char* path) {
  if (!run || !path) return OPD_ERR_INVALID;
  return guarded(&run->error, [&] {
    run->config = opd::RunConfig::from_file(path);
    return OPD_OK;
  });
}

opd_status opd_run_execute(opd_run* run, const char* subcommand) {
  if (!run || !subcommand) return OPD_ERR_INVALID;
  return guarded(&run->error, [&]() -> opd_status {
    run->outcome = opd::run_subcommand(subcommand, run->config);
    run->summary = run->outcome.summary;
    return run->outcome.stat_pass ? OPD_OK : OPD_ERR_STAT;
  });
}

const char* opd_run_error(const opd_run* run) { return run ? run->error.c_str() : "null handle"; }

const char* opd_run_summary(const opd_run* run) { return run ? run->summary.c_str() : ""; }

int opd_run_file_count(const opd_run* run) {
  return run ? static_cast<int>(run->outcome.files.size()) : 0;
}

const char* opd_run_file(const opd_run* run, int index) {
  if (!run || index < 0 || index >= static_cast<int>(run->outcome.files.size())) return nullptr;
  return run->outcome.files[static_cast<std::size_t>(index)].c_str();
}

opd_status opd_charlier(int64_t k, int64_t n, double rho, double* out) {
  if (!out) return OPD_ERR_INVALID;
  return guarded(nullptr, [&] {
    *out = opd::charlier(k, n, rho);
    return OPD_OK;
  });
}

opd_status opd_charlier_norm(int64_t k, double rho, double* out) {
  if (!out) return OPD_ERR_INVALID;
  return guarded(nullptr, [&] {
    opd::DualConfig xi;
    if (k > 0) xi.add(opd::origin(1), k);
    opd::PolyParams params;
    params.rho = rho;
    *out = opd::norm_a(xi, params);
    return OPD_OK;
  });
}

opd_status opd_rw_kernel_point(int dim, double t, const int64_t* x, double* out) {
  if (!out || !x) return OPD_ERR_INVALID;
  return guarded(nullptr, [&] {
    const opd::KernelSpec spec = opd::KernelSpec::nearest_neighbor(dim);
    opd::Site site(dim);
    for (int i = 0; i < dim; ++i) site.c[i] = x[i];
    opd::KernelOptions opts;
    opts.max_radius = site.norm_inf();
    *out = opd::rw_kernel(spec, t, opts).at(site);
    return OPD_OK;
  });
}

opd_status opd_gaussian_kernel(int dim, double t, const int64_t* x, double* out) {
  if (!out || !x) return OPD_ERR_INVALID;
  return guarded(nullptr, [&] {
    opd::Site site(dim);
    for (int i = 0; i < dim; ++i) site.c[i] = x[i];
    *out = opd::gaussian_kernel(dim, t, site);
    return OPD_OK;
  });
}

}  // extern "C"
