// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
//
// C interface to trimreg: sparse M-estimation with a trimmed l1 penalty,
// reference baselines, synthetic data generation and an experiment driver.
// Every fallible function returns a trimreg_status; on failure
// trimreg_last_error() describes the problem for the calling thread.
#ifndef TRIMREG_TRIMREG_H_
#define TRIMREG_TRIMREG_H_

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum trimreg_status {
  TRIMREG_OK = 0,
  TRIMREG_INVALID_ARGUMENT = 1,
  TRIMREG_NOT_POSITIVE_DEFINITE = 2,
  TRIMREG_DIVERGED = 3,
  TRIMREG_IO_ERROR = 4,
  TRIMREG_INTERNAL_ERROR = 5
} trimreg_status;

const char* trimreg_version(void);

/* Message for the most recent failure on this thread; never NULL. */
const char* trimreg_last_error(void);

/* ------------------------------------------------------------------ */
/* Penalty primitives on plain arrays                                  */

/* Sum of the m - h smallest magnitudes of theta[0..m). */
int trimreg_trimmed_l1(const double* theta, int64_t m, int64_t h, double* value_out);

/* Euclidean projection of z onto {w in [0,1]^m : sum w = m - h}. */
int trimreg_project_capped_simplex(const double* z, int64_t m, int64_t h, double* w_out);

/* Coordinate-wise soft threshold of v at step * weights[i]. */
int trimreg_prox_weighted_l1(const double* v, const double* weights, int64_t m, double step,
                             double* theta_out);

/* ------------------------------------------------------------------ */
/* Problems                                                            */

typedef struct trimreg_problem trimreg_problem;

/* Least squares (1/n)||y - X theta||^2 with every coordinate penalized.
   X is row major, n rows of p entries. */
int trimreg_problem_ls(const double* X, const double* y, int64_t n, int64_t p,
                       trimreg_problem** problem_out);

/* Gaussian log-determinant loss trace(S Theta) - log det Theta over the
   p x p precision matrix (flattened column major); off-diagonal entries are
   penalized, the diagonal is free. S is the symmetric sample covariance,
   row major (equivalently column major). */
int trimreg_problem_ggm(const double* S, int64_t p, trimreg_problem** problem_out);

/* Builds the problem matching a dataset directory written by
   trimreg_gen_dataset: regression designs give the least-squares problem,
   the graphical design gives the log-determinant problem on its sample
   covariance. */
int trimreg_problem_load(const char* dataset_dir, trimreg_problem** problem_out);

int trimreg_problem_dim(const trimreg_problem* problem, int64_t* dim_out,
                        int64_t* penalized_out);

void trimreg_problem_free(trimreg_problem* problem);

/* ------------------------------------------------------------------ */
/* Solving                                                             */

typedef struct trimreg_result trimreg_result;

typedef struct trimreg_solve_config {
  double lambda;            /* penalty strength, >= 0 */
  int64_t trim_count;       /* h: largest-magnitude entries left unpenalized */
  double eta;               /* theta step; 0 picks 1 / smooth constant */
  double tau;               /* weight step; 0 picks 1 / lambda */
  int64_t max_iters;
  double tol_stationarity;  /* stop when the squared measure T drops below */
  double tol_objective;     /* relative plateau width; 0 disables */
  int64_t plateau_span;
  int exact_weight_step;    /* trimmed solver: minimize over weights exactly */
  double scad_a;            /* scad knot, > 2 */
  double mcp_gamma;         /* mcp scale, > 1 */
} trimreg_solve_config;

/* Fills the defaults (lambda 0, trim_count 0, max_iters 5000, tolerance
   1e-6, scad_a 3, mcp_gamma 2.5). */
void trimreg_solve_config_init(trimreg_solve_config* config);

/* method: trimmed | dc | lasso | glasso | scad | mcp. theta_init may be
   NULL for the problem's default start. */
int trimreg_solve(const trimreg_problem* problem, const char* method,
                  const trimreg_solve_config* config, const double* theta_init,
                  trimreg_result** result_out);

int64_t trimreg_result_dim(const trimreg_result* result);
int trimreg_result_theta(const trimreg_result* result, double* theta_out);
double trimreg_result_objective(const trimreg_result* result);
double trimreg_result_objective_reduced(const trimreg_result* result);
double trimreg_result_stationarity(const trimreg_result* result);
int64_t trimreg_result_iterations(const trimreg_result* result);

/* 0 stationary, 1 iteration cap, 2 objective plateau. */
int trimreg_result_stop_reason(const trimreg_result* result);

int64_t trimreg_result_trace_len(const trimreg_result* result);

/* row_out: {iter, objective, objective_reduced, certificate, stationarity}. */
int trimreg_result_trace_row(const trimreg_result* result, int64_t i, double row_out[5]);

/* Writes the trace as CSV with columns method, lambda, iter, objective,
   G_k, T. */
int trimreg_result_write_trace_csv(const trimreg_result* result, const char* path,
                                   const char* method_label, double lambda);

void trimreg_result_free(trimreg_result* result);

/* ------------------------------------------------------------------ */
/* Synthetic data                                                      */

/* design: m2 | m1 | diamond. Writes X.csv, theta_star.csv, support.csv,
   meta.json and y.csv (regression) or sample_cov.csv (diamond) into
   out_dir. For the diamond design p and k are implied and theta_cov is the
   edge correlation rho. */
int trimreg_gen_dataset(const char* design, int64_t n, int64_t p, int64_t k, double theta_cov,
                        double beta_sd, double noise_sd, uint64_t seed, const char* out_dir);

/* ------------------------------------------------------------------ */
/* Experiments                                                         */

/* experiment: support_recovery | error_curves | convergence | ggm_diamond |
   init_study. Returns the fully resolved plan as JSON; free with
   trimreg_string_free. */
int trimreg_plan_defaults(const char* experiment, char** json_out);

/* Parses a plan (unknown keys rejected), fills defaults, returns the
   resolved plan as JSON. */
int trimreg_plan_resolve(const char* plan_json, char** json_out);

/* Runs the plan, writing CSV outputs into out_dir. files_json_out (optional)
   receives a JSON array of the file names written. jobs > 1 runs replicates
   concurrently; outputs are identical regardless. */
int trimreg_run_experiment(const char* plan_json, const char* out_dir, int jobs,
                           char** files_json_out);

void trimreg_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Diagnostics                                                         */

/* Incoherence diagnostics of a saved regression dataset: over num_samples
   random trim sets T of size trim_count, block norms of Gamma = X^T X / n
   on A = support union T. report_out receives {max ||inv(G_AA)||_inf,
   max ||G_{A^c A} inv(G_AA)||_inf, max eigenvalue bound, samples,
   singular failures}. */
int trimreg_diag_incoherence(const char* dataset_dir, int64_t trim_count, int64_t num_samples,
                             uint64_t seed, double report_out[5]);

#ifdef __cplusplus
}
#endif

#endif /* TRIMREG_TRIMREG_H_ */
