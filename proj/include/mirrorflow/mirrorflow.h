/*
 * Copyright (C) 2026 mirrorflow contributors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface of libmirrorflow: flow matching on convex domains through
 * regularized barrier mirror maps, with Student-t priors in the dual space.
 *
 * Conventions:
 *  - every function returns mf_status; MF_OK is 0
 *  - on failure, mf_last_error() describes the problem (thread-local)
 *  - matrices cross the boundary row-major, one sample per row
 *  - objects returned through mf_*_create/load are owned by the caller and
 *    released with the matching mf_*_free
 */

#ifndef MIRRORFLOW_H
#define MIRRORFLOW_H

#include <stdint.h>

#if defined(_WIN32)
#define MF_API __declspec(dllexport)
#else
#define MF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mf_status {
  MF_OK = 0,
  MF_ERROR_INVALID_ARGUMENT = 1,
  MF_ERROR_DIMENSION = 2,
  MF_ERROR_INFEASIBLE = 3,
  MF_ERROR_NUMERIC = 4,
  MF_ERROR_FORMAT = 5,
  MF_ERROR_STATS = 6,
  MF_ERROR_SAMPLING = 7,
  MF_ERROR_CONFIG = 8,
  MF_ERROR_PRECONDITION = 9,
  MF_ERROR_IO = 10,
  MF_ERROR_INTERNAL = 11
} mf_status;

typedef struct mf_domain mf_domain;  /* convex set given by barriers */
typedef struct mf_map mf_map;        /* mirror potential over a domain */
typedef struct mf_model mf_model;    /* trained MLP velocity field */
typedef struct mf_config mf_config;  /* experiment configuration */

MF_API const char* mf_version(void);
/* Message of the most recent failure on this thread; empty when none. */
MF_API const char* mf_last_error(void);
MF_API const char* mf_status_name(mf_status status);

/* ---- convex domains ---------------------------------------------------- */

/* Polytope { x : A x < b }; A is rows x dim, row-major. */
MF_API mf_status mf_domain_create_polytope(int32_t dim, int32_t rows,
                                           const double* A, const double* b,
                                           mf_domain** out);
/* Open ball { x : ||x||^2 < radius^2 }. */
MF_API mf_status mf_domain_create_ball(int32_t dim, double radius,
                                       mf_domain** out);
/* Seeded random bounded polytope with the origin interior (margin >= 3). */
MF_API mf_status mf_domain_generate_polytope(int32_t dim, int32_t rows,
                                             uint64_t seed, mf_domain** out);
MF_API void mf_domain_free(mf_domain* domain);

MF_API mf_status mf_domain_dim(const mf_domain* domain, int32_t* out);
MF_API mf_status mf_domain_num_barriers(const mf_domain* domain, int32_t* out);
/* Barrier values (phi_1(x), ..., phi_m(x)) into out[m]. */
MF_API mf_status mf_domain_barrier_values(const mf_domain* domain,
                                          const double* x, double* out);
/* Strict feasibility (all barriers negative): 1 or 0. */
MF_API mf_status mf_domain_contains(const mf_domain* domain, const double* x,
                                    int32_t* out);
MF_API mf_status mf_domain_interior_point(const mf_domain* domain, double* out);

/* ---- mirror maps -------------------------------------------------------- */

/* Psi(x) = -1/(1-kappa) sum_i (-phi_i(x))^{1-kappa} + ||x||^2/2, kappa in (0,1). */
MF_API mf_status mf_map_create_regularized(const mf_domain* domain, double kappa,
                                           mf_map** out);
/* Psi(x) = -sum_i log(-phi_i(x)). */
MF_API mf_status mf_map_create_log_barrier(const mf_domain* domain, mf_map** out);
MF_API void mf_map_free(mf_map* map);

/* z = grad Psi(x); MF_ERROR_INFEASIBLE when x is not strictly inside. */
MF_API mf_status mf_map_gradient(const mf_map* map, const double* x, double* z);
/* grad^2 Psi(x) into h[dim*dim], row-major. */
MF_API mf_status mf_map_hessian(const mf_map* map, const double* x, double* h);
/* x = grad Psi*(z): damped Newton solve of grad Psi(x) = z. */
MF_API mf_status mf_map_inverse_gradient(const mf_map* map, const double* z,
                                         double* x);

/* ---- sampling ----------------------------------------------------------- */

/* n rows of t_{dim,nu} draws into out[n*dim]. Deterministic given seed. */
MF_API mf_status mf_sample_student_t(int32_t dim, double nu, int64_t n,
                                     uint64_t seed, double* out);

/* ---- velocity models ---------------------------------------------------- */

MF_API mf_status mf_model_load(const char* path, mf_model** out);
MF_API mf_status mf_model_save(const mf_model* model, const char* path);
MF_API void mf_model_free(mf_model* model);
MF_API mf_status mf_model_dim(const mf_model* model, int32_t* out);
/* v(z, t) into out[dim]; t in [0, 1]. */
MF_API mf_status mf_model_forward(const mf_model* model, const double* z,
                                  double t, double* out);

/* ---- sample-quality metrics --------------------------------------------- */

/* RBF V-statistic MMD^2. bandwidth <= 0 selects the median heuristic;
 * bandwidth_used (nullable) receives the applied value. */
MF_API mf_status mf_metric_mmd2(const double* X, int64_t n, const double* Y,
                                int64_t m, int32_t dim, double bandwidth,
                                double* out, double* bandwidth_used);
/* k-nearest-neighbor KL estimate of KL(P || Q). */
MF_API mf_status mf_metric_kl_knn(const double* P, int64_t n, const double* Q,
                                  int64_t m, int32_t dim, int32_t k, double* out);
/* Exact empirical 2-Wasserstein distance between equal-size batches (n <= 1024). */
MF_API mf_status mf_metric_w2(const double* X, const double* Y, int64_t n,
                              int32_t dim, double* out);
/* Fraction of rows strictly inside the domain. */
MF_API mf_status mf_metric_feasibility(const mf_domain* domain, const double* X,
                                       int64_t n, double* out);

/* ---- experiment harness -------------------------------------------------- */

MF_API mf_status mf_config_load(const char* path, mf_config** out);
MF_API mf_status mf_config_load_string(const char* json_text, mf_config** out);
/* "polytope2d", "polytope10d" or "ball6d". */
MF_API mf_status mf_config_preset(const char* name, mf_config** out);
MF_API void mf_config_free(mf_config* config);
/* Replace the configured seed list with a single seed. */
MF_API mf_status mf_config_set_seed(mf_config* config, uint64_t seed);
MF_API mf_status mf_config_output_dir(const mf_config* config, char* buf,
                                      int64_t bufsize);

/* Pipeline phases. out_dir NULL means the config's output_dir. The phases
 * write model_seed<k>.ckpt, samples_seed<k>.csv(.meta.json),
 * metrics_seed<k>.json, aggregate.json and report.md. */
MF_API mf_status mf_run_train(const mf_config* config, const char* out_dir,
                              int32_t verbose);
MF_API mf_status mf_run_sample(const mf_config* config, const char* out_dir,
                               int32_t verbose);
MF_API mf_status mf_run_eval(const mf_config* config, const char* out_dir,
                             int32_t verbose);
/* All phases per seed plus aggregation; failing seeds are recorded in the
 * report and do not abort the run. */
MF_API mf_status mf_run_experiment(const mf_config* config, const char* out_dir,
                                   int32_t verbose);

/* Runs the library's invariant checks, printing one PASS/FAIL line per check
 * (residual details with verbose != 0). failures receives the failed count. */
MF_API mf_status mf_run_verify(int32_t verbose, int32_t* failures);

#ifdef __cplusplus
}
#endif

#endif /* MIRRORFLOW_H */
