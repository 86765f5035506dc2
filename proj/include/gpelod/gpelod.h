#ifndef GPELOD_GPELOD_H
#define GPELOD_GPELOD_H

/* C interface of the LOD Crank-Nicolson solver for the 1D Gross-Pitaevskii
 * equation  i u_t = -u'' + V u + beta |u|^2 u  on (a, b), u(a) = u(b) = 0.
 *
 * Complex arrays are interleaved (re, im) doubles. Every function returns a
 * gpelod_status; on failure gpelod_last_error() describes the problem (the
 * message is per thread and valid until the next call on that thread).
 * Handles are opaque and owned by the caller; destroy functions accept NULL. */

#include <stddef.h>

#if defined(_WIN32)
#define GPELOD_API __declspec(dllexport)
#else
#define GPELOD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gpelod_status {
  GPELOD_OK = 0,
  GPELOD_INVALID_ARGUMENT = 1,
  GPELOD_DIMENSION_MISMATCH = 2,
  GPELOD_SINGULAR_MATRIX = 3,
  GPELOD_NOT_CONVERGED = 4,
  GPELOD_IO_ERROR = 5,
  GPELOD_CONFIG_ERROR = 6,
  GPELOD_ASSERTION_FAILED = 7,
  GPELOD_INTERNAL_ERROR = 8
} gpelod_status;

typedef enum gpelod_scheme {
  GPELOD_SCHEME_MODIFIED_LOD = 0,  /* projected density, conserves E_LOD */
  GPELOD_SCHEME_CLASSICAL_LOD = 1, /* exact cubic term in the LOD space */
  GPELOD_SCHEME_CLASSICAL_FEM = 2  /* exact cubic term on the fine grid */
} gpelod_scheme;

typedef struct gpelod_grid gpelod_grid;
typedef struct gpelod_space gpelod_space;
typedef struct gpelod_stepper gpelod_stepper;
typedef struct gpelod_report gpelod_report;

typedef struct gpelod_invariants {
  double t;
  double mass;
  double energy;
  double energy_lod; /* NaN for fine-grid states */
  double momentum;
  double xc;
} gpelod_invariants;

typedef struct gpelod_solver_options {
  double tolerance;   /* 0 selects 1e-10 */
  int max_iterations; /* 0 selects 200 */
  int newton;         /* fine-grid scheme only */
} gpelod_solver_options;

/* Command-line style overrides; a has_* flag of 0 leaves the value alone. */
typedef struct gpelod_overrides {
  int has_coarse_exponent;
  int coarse_exponent;
  int has_layers;
  int layers;
  int has_tau;
  double tau;
  int has_steps;
  long long steps;
  const char* output_dir; /* NULL keeps the configured directory */
} gpelod_overrides;

GPELOD_API const char* gpelod_version(void);
GPELOD_API const char* gpelod_last_error(void);
GPELOD_API const char* gpelod_status_string(gpelod_status status);

/* Grids: coarse_elements cells of size H, each split into 2^refinement. */
GPELOD_API gpelod_status gpelod_grid_create(double a, double b, int coarse_elements,
                                            int refinement, gpelod_grid** out);
GPELOD_API void gpelod_grid_destroy(gpelod_grid* grid);
GPELOD_API gpelod_status gpelod_grid_info(const gpelod_grid* grid, double* coarse_h,
                                          double* fine_h, int* fine_dofs);
/* Nodal interpolant of the two-soliton exact solution at time t. */
GPELOD_API gpelod_status gpelod_benchmark_interpolant(const gpelod_grid* grid, double t,
                                                      double* fine_values);
GPELOD_API gpelod_status gpelod_fine_invariants(const gpelod_grid* grid,
                                                const double* fine_values,
                                                const char* potential, double beta,
                                                gpelod_invariants* out);

/* LOD spaces. v1 enters the corrector inner product and must be >= 0; the
 * potential strings are zero | constant:c | harmonic:g | lattice:alpha,lambda.
 * layers 0 selects the default for H. */
GPELOD_API gpelod_status gpelod_space_create(const gpelod_grid* grid, const char* v1,
                                             const char* v2, double beta, int layers,
                                             double omega_tolerance, gpelod_space** out);
GPELOD_API void gpelod_space_destroy(gpelod_space* space);
GPELOD_API gpelod_status gpelod_space_info(const gpelod_space* space, int* dim, int* layers,
                                           size_t* omega_entries);
GPELOD_API gpelod_status gpelod_space_ritz_project(const gpelod_space* space,
                                                   const double* fine_values,
                                                   double* coefficients);
GPELOD_API gpelod_status gpelod_space_expand(const gpelod_space* space,
                                             const double* coefficients,
                                             double* fine_values);
GPELOD_API gpelod_status gpelod_space_invariants(const gpelod_space* space,
                                                 const double* coefficients, double t,
                                                 gpelod_invariants* out);

/* Steppers. LOD schemes take a space; the fine-grid scheme takes a grid and
 * potential string. options may be NULL. */
GPELOD_API gpelod_status gpelod_stepper_create_lod(const gpelod_space* space,
                                                   gpelod_scheme scheme, double tau,
                                                   const gpelod_solver_options* options,
                                                   gpelod_stepper** out);
GPELOD_API gpelod_status gpelod_stepper_create_fem(const gpelod_grid* grid,
                                                   const char* potential, double beta,
                                                   double tau,
                                                   const gpelod_solver_options* options,
                                                   gpelod_stepper** out);
GPELOD_API void gpelod_stepper_destroy(gpelod_stepper* stepper);
GPELOD_API gpelod_status gpelod_stepper_dim(const gpelod_stepper* stepper, int* dim);
GPELOD_API gpelod_status gpelod_stepper_set_state(gpelod_stepper* stepper,
                                                  const double* values, double t);
GPELOD_API gpelod_status gpelod_stepper_get_state(const gpelod_stepper* stepper,
                                                  double* values, double* t);
/* On non-convergence the state stays at the last completed step. */
GPELOD_API gpelod_status gpelod_stepper_advance(gpelod_stepper* stepper, long long steps,
                                                int* last_iterations);

/* Experiments: invariants | decay | converge | drift | cpu. config_path NULL
 * uses the built-in defaults; overrides may be NULL. */
GPELOD_API gpelod_status gpelod_run_experiment(const char* name, const char* config_path,
                                               const gpelod_overrides* overrides,
                                               gpelod_report** out);
GPELOD_API void gpelod_report_destroy(gpelod_report* report);
/* directory NULL writes to the configured output directory. */
GPELOD_API gpelod_status gpelod_report_write(const gpelod_report* report,
                                             const char* directory);
GPELOD_API gpelod_status gpelod_report_counts(const gpelod_report* report, int* checks,
                                              int* failed_checks, int* failures,
                                              int* nonconverged);
GPELOD_API gpelod_status gpelod_report_check(const gpelod_report* report, int index,
                                             const char** name, int* passed,
                                             const char** detail);
GPELOD_API gpelod_status gpelod_report_failure(const gpelod_report* report, int index,
                                               const char** message);
/* *value is NULL when the key is absent. */
GPELOD_API gpelod_status gpelod_report_summary(const gpelod_report* report, const char* key,
                                               const char** value);
/* Resolved configuration lines; *line is NULL past the last one. */
GPELOD_API gpelod_status gpelod_report_header(const gpelod_report* report, int index,
                                              const char** line);

#ifdef __cplusplus
}
#endif

#endif /* GPELOD_GPELOD_H */
