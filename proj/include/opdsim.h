/* opdsim: C interface to the duality-polynomial simulation toolkit.
 *
 * Opaque-handle API: create a run, set configuration keys, execute a
 * subcommand; outputs land in the configured directory. All functions return
 * a status code; the last error message is retrievable from the handle.
 * A handful of direct evaluation helpers expose the core numerics without a
 * run handle.
 */

#ifndef OPDSIM_H
#define OPDSIM_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  OPD_OK = 0,
  OPD_ERR_INVALID = 2,   /* bad configuration or precondition */
  OPD_ERR_NUMERIC = 3,   /* numerical failure */
  OPD_ERR_STAT = 4       /* statistical acceptance failed */
} opd_status;

typedef struct opd_run opd_run;

const char* opd_version(void);

opd_run* opd_run_new(void);
void opd_run_free(opd_run* run);

/* Set one configuration key (see the README for the key list). */
opd_status opd_run_set(opd_run* run, const char* key, const char* value);

/* Load key = value lines (with optional [sections]) from a config file. */
opd_status opd_run_load_config(opd_run* run, const char* path);

/* Execute one subcommand: kernel, duality, covariance, scaling, bg-rate,
 * lclt, expand, nonstationary. */
opd_status opd_run_execute(opd_run* run, const char* subcommand);

/* Last error message (empty string if none); owned by the handle. */
const char* opd_run_error(const opd_run* run);

/* One-line human summary of the last successful execution. */
const char* opd_run_summary(const opd_run* run);

/* Paths written by the last execution. */
int opd_run_file_count(const opd_run* run);
const char* opd_run_file(const opd_run* run, int index);

/* --- direct evaluation helpers ------------------------------------- */

/* Single-site duality polynomial d(k, n) at density rho. */
opd_status opd_charlier(int64_t k, int64_t n, double rho, double* out);

/* Squared L2 norm of the single-site polynomial: k! rho^{-k}. */
opd_status opd_charlier_norm(int64_t k, double rho, double* out);

/* Continuous-time nearest-neighbor walk kernel p_t(x) on Z^dim. */
opd_status opd_rw_kernel_point(int dim, double t, const int64_t* x, double* out);

/* Gaussian comparison kernel for the same walk. */
opd_status opd_gaussian_kernel(int dim, double t, const int64_t* x, double* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* OPDSIM_H */
