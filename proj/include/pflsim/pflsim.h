/* Copyright 2026 The pflsim Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the pflsim estimator and simulation harness.
 *
 * Every call returns a pflsim_status. On failure the message of the most
 * recent error on the calling thread is available from pflsim_last_error().
 * Handles are opaque and owned by the caller; release them with the matching
 * *_free function. Matrices are dense and row-major. */

#ifndef PFLSIM_PFLSIM_H_
#define PFLSIM_PFLSIM_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PFLSIM_API __declspec(dllexport)
#else
#define PFLSIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pflsim_status {
  PFLSIM_OK = 0,
  PFLSIM_ERR_IO = 1,
  PFLSIM_ERR_FORMAT = 2,
  PFLSIM_ERR_PARSE = 3,
  PFLSIM_ERR_DIMENSION = 4,
  PFLSIM_ERR_EXTRAPOLATION = 5,
  PFLSIM_ERR_PRECONDITION = 6,
  PFLSIM_ERR_RANK = 7,
  PFLSIM_ERR_DEGENERATE_INDEX = 8,
  PFLSIM_ERR_CONFIGURATION = 9,
  PFLSIM_ERR_HARNESS = 10,
  PFLSIM_ERR_INVALID_ARGUMENT = 11,
  PFLSIM_ERR_INTERNAL = 12
} pflsim_status;

typedef enum pflsim_model { PFLSIM_MODEL_41 = 0, PFLSIM_MODEL_42 = 1 } pflsim_model;

/* Curve files: the first row is read as the grid when strictly increasing. */
typedef enum pflsim_header {
  PFLSIM_HEADER_AUTO = 0,
  PFLSIM_HEADER_PRESENT = 1,
  PFLSIM_HEADER_ABSENT = 2
} pflsim_header;

typedef struct pflsim_fit pflsim_fit;
typedef struct pflsim_report pflsim_report;

typedef struct pflsim_estimator_options {
  int m;            /* score cut-off while profiling */
  int degree;       /* spline degree */
  double c0;        /* h0 = c0 * n^(-1/5) */
  double h0;        /* > 0 overrides c0 */
  int subintervals; /* > 0 overrides h0 and c0 */
  double rho0;      /* lower bound for the last index coordinate */
  double tol_obj;
  double tol_step;
  int max_iter;
  double ridge;
  int restarts;     /* directions scanned before the quasi-Newton search */
  int refine;       /* best scanned directions that are optimized */
  uint64_t seed;
} pflsim_estimator_options;

typedef struct pflsim_sim_options {
  pflsim_model model;
  size_t n;
  double delta;
  size_t replications;
  uint64_t seed;
  size_t test_size;
  size_t grid_size;
  double sigma;     /* <= 0 selects the model default */
  unsigned jobs;    /* 0 selects the number of hardware threads */
} pflsim_sim_options;

typedef struct pflsim_fit_info {
  size_t q;         /* scalar covariates */
  size_t d;         /* index covariates */
  size_t grid_size;
  int m;
  int m_tilde;
  int k_star;
  double objective;
  double initial_objective;
  int iterations;
  int converged;
} pflsim_fit_info;

typedef struct pflsim_report_info {
  size_t replications;
  size_t failures;
  size_t converged;
  double mise_g_mean;
  double mise_g_median;
  double mise_a_mean;
  double mise_a_median;
  double mae_mean;
  double mae_median;
} pflsim_report_info;

PFLSIM_API const char* pflsim_version(void);
PFLSIM_API const char* pflsim_status_string(pflsim_status status);
/* Message of the last failed call on this thread; "" if none. */
PFLSIM_API const char* pflsim_last_error(void);

PFLSIM_API void pflsim_estimator_options_default(pflsim_estimator_options* options);
PFLSIM_API void pflsim_sim_options_default(pflsim_sim_options* options);

/* options may be NULL for defaults. */
PFLSIM_API pflsim_status pflsim_fit_files(const char* curves_path, const char* scalars_path,
                                          pflsim_header header,
                                          const pflsim_estimator_options* options,
                                          pflsim_fit** out);

/* curves: n x grid_size; w: n x q (may be NULL when q = 0); z: n x d. */
PFLSIM_API pflsim_status pflsim_fit_arrays(size_t n, size_t grid_size, const double* grid,
                                           const double* curves, const double* y, size_t q,
                                           const double* w, size_t d, const double* z,
                                           const pflsim_estimator_options* options,
                                           pflsim_fit** out);

PFLSIM_API void pflsim_fit_free(pflsim_fit* fit);

PFLSIM_API pflsim_status pflsim_fit_save(const pflsim_fit* fit, const char* path);
PFLSIM_API pflsim_status pflsim_fit_load(const char* path, pflsim_fit** out);

PFLSIM_API pflsim_status pflsim_fit_get_info(const pflsim_fit* fit, pflsim_fit_info* info);
/* Copy q, d or grid_size values; capacity is checked. */
PFLSIM_API pflsim_status pflsim_fit_alpha(const pflsim_fit* fit, double* out, size_t capacity);
PFLSIM_API pflsim_status pflsim_fit_beta(const pflsim_fit* fit, double* out, size_t capacity);
PFLSIM_API pflsim_status pflsim_fit_slope(const pflsim_fit* fit, double* out, size_t capacity);
PFLSIM_API pflsim_status pflsim_fit_link(const pflsim_fit* fit, double u, double* out);

/* Writes a NUL-terminated summary into buffer when it fits; *needed receives
 * the required size including the terminator. */
PFLSIM_API pflsim_status pflsim_fit_summary(const pflsim_fit* fit, char* buffer,
                                            size_t capacity, size_t* needed);

/* Curves on the fit grid when grid is NULL, otherwise on the given grid. */
PFLSIM_API pflsim_status pflsim_predict_arrays(const pflsim_fit* fit, size_t n,
                                               size_t grid_size, const double* grid,
                                               const double* curves, const double* w,
                                               const double* z, double* out);

/* Writes one prediction per input row to out_path; *rows may be NULL. */
PFLSIM_API pflsim_status pflsim_predict_files(const pflsim_fit* fit, const char* curves_path,
                                              const char* scalars_path, pflsim_header header,
                                              const char* out_path, size_t* rows);

/* estimator may be NULL for defaults. */
PFLSIM_API pflsim_status pflsim_simulate(const pflsim_sim_options* options,
                                         const pflsim_estimator_options* estimator,
                                         pflsim_report** out);
PFLSIM_API void pflsim_report_free(pflsim_report* report);
PFLSIM_API pflsim_status pflsim_report_get_info(const pflsim_report* report,
                                                pflsim_report_info* info);
/* Report JSON and per-replication CSV. Runtimes are written only when
 * timings is nonzero, which makes the files run-dependent. */
PFLSIM_API pflsim_status pflsim_report_save(const pflsim_report* report, const char* json_path,
                                            const char* table_path, int timings);
PFLSIM_API pflsim_status pflsim_report_summary(const pflsim_report* report, char* buffer,
                                               size_t capacity, size_t* needed);

/* One training draw of a simulation model, written as a curve file and a
 * y,w..,z.. covariate file. */
PFLSIM_API pflsim_status pflsim_generate_files(const pflsim_sim_options* options,
                                               uint32_t replication, const char* curves_path,
                                               const char* scalars_path);

#ifdef __cplusplus
}
#endif

#endif /* PFLSIM_PFLSIM_H_ */
