#ifndef CALHEAT_H
#define CALHEAT_H

/* C interface to the calheat library. Every function returns a status code;
 * on failure calheat_last_error() describes the problem (per thread).
 * Space-time arrays are row-major Nt x M: entry (k, j) is panel k, node j. */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define CALHEAT_API __declspec(dllexport)
#else
#define CALHEAT_API __attribute__((visibility("default")))
#endif

typedef enum {
  CALHEAT_OK = 0,
  CALHEAT_ASSERTION_FAILED = 1,
  CALHEAT_CONFIG_ERROR = 2,
  CALHEAT_SOLVER_ERROR = 3,
  CALHEAT_INVALID_ARGUMENT = 4
} calheat_status;

typedef struct calheat_config calheat_config;
typedef struct calheat_curve calheat_curve;
typedef struct calheat_shape calheat_shape;
typedef struct calheat_solver calheat_solver;
typedef struct calheat_ntd calheat_ntd;

CALHEAT_API const char* calheat_last_error(void);
CALHEAT_API const char* calheat_version(void);
CALHEAT_API calheat_status calheat_set_threads(int n);

/* Configuration files and command runs. */
CALHEAT_API calheat_status calheat_config_load(const char* path, calheat_config** out);
CALHEAT_API calheat_status calheat_config_parse(const char* text, calheat_config** out);
CALHEAT_API calheat_status calheat_config_set(calheat_config* cfg, const char* key, const char* value);
CALHEAT_API void calheat_config_free(calheat_config* cfg);

/* Runs a command (solve-linear, solve-nonlinear, ntd, shape-sweep, verify,
 * convergence) writing into out_dir. Returns CALHEAT_ASSERTION_FAILED when a
 * check fails; *failed receives the failure count when non-null. */
CALHEAT_API calheat_status calheat_run(const calheat_config* cfg, const char* command, const char* out_dir,
                                       uint64_t seed, int* failed);

/* Curves. */
CALHEAT_API calheat_status calheat_curve_circle(double cx, double cy, double r, calheat_curve** out);
CALHEAT_API calheat_status calheat_curve_ellipse(double cx, double cy, double a, double b, double angle,
                                                 calheat_curve** out);
CALHEAT_API calheat_status calheat_curve_fourier(double cx, double cy, double r0, const double* cos_coeffs,
                                                 int n_cos, const double* sin_coeffs, int n_sin,
                                                 calheat_curve** out);
CALHEAT_API void calheat_curve_free(calheat_curve* c);

/* Shape maps phi = id + D of a reference curve. */
CALHEAT_API calheat_status calheat_shape_identity(const calheat_curve* reference, calheat_shape** out);
/* phi + eps * D with D(p) = L (p - c) + b, L row-major 2x2, c the reference centroid. */
CALHEAT_API calheat_status calheat_shape_perturb_affine(const calheat_shape* base, const double linear[4],
                                                        const double translation[2], double eps,
                                                        calheat_shape** out);
/* phi + eps * (a cos k theta + b sin k theta) u, u the unit radial direction. */
CALHEAT_API calheat_status calheat_shape_perturb_radial(const calheat_shape* base, int k, double a, double b,
                                                        double eps, calheat_shape** out);
CALHEAT_API void calheat_shape_free(calheat_shape* s);

/* Discretized problem on the domain between `outer` and the image of `shape`. */
CALHEAT_API calheat_status calheat_solver_create(const calheat_curve* outer, const calheat_shape* shape, double T,
                                                 int Nt, int M_outer, int M_inner, calheat_solver** out);
CALHEAT_API void calheat_solver_sizes(const calheat_solver* s, int* Nt, int* M_outer, int* M_inner);
/* Node coordinates, interleaved x, y; `inner` selects the hole. */
CALHEAT_API calheat_status calheat_solver_nodes(const calheat_solver* s, int inner, double* xy);
CALHEAT_API double calheat_solver_time(const calheat_solver* s, int k);

/* Linear Robin problem dn u = f outside, dn u = -gamma u + g on the hole. */
CALHEAT_API calheat_status calheat_solver_solve_linear(calheat_solver* s, const double* gamma, const double* f,
                                                       const double* g, double* mu, double* eta);
/* Nonlinear problem dn u = G(t, x, u) on the hole with G tabulated as
 * coeff[j][k][i], j = 0..degree, the coefficient of u^j at (t_k, x_i). */
CALHEAT_API calheat_status calheat_solver_solve_nonlinear(calheat_solver* s, int degree, const double* coeff,
                                                          const double* f, double tol, int max_iter,
                                                          double* mu, double* eta, int* iterations);
CALHEAT_API calheat_status calheat_solver_traces(const calheat_solver* s, const double* mu, const double* eta,
                                                 double* outer_trace, double* inner_trace);
/* u at n interior points (t[i], xy[2i], xy[2i + 1]). */
CALHEAT_API calheat_status calheat_solver_eval(const calheat_solver* s, const double* mu, const double* eta, int n,
                                               const double* t, const double* xy, double* values);
CALHEAT_API void calheat_solver_free(calheat_solver* s);

/* Neumann-to-Dirichlet map of the linearized problem with coefficient gamma. */
CALHEAT_API calheat_status calheat_ntd_create(const calheat_solver* s, const double* gamma, calheat_ntd** out);
CALHEAT_API calheat_status calheat_ntd_apply(const calheat_ntd* op, const double* f, double* u);
/* Block mapping source panel kp to target panel k, row-major M_outer x M_outer. */
CALHEAT_API calheat_status calheat_ntd_block(const calheat_ntd* op, int k, int kp, double* block);
CALHEAT_API void calheat_ntd_free(calheat_ntd* op);

#ifdef __cplusplus
}
#endif

#endif
