#ifndef XVA_H
#define XVA_H

/* Generated from the xva-ffi crate by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// The call completed.
#define XVA_OK 0

// A numeric input fell outside its admissible domain.
#define XVA_ERR_INVALID_INPUT 1

// A solver or lattice specification failed validation.
#define XVA_ERR_CONFIG 2

// The operation is not defined for the requested collateral regime.
#define XVA_ERR_UNSUPPORTED_REGIME 3

// The solver gave up.
#define XVA_ERR_SOLVER 4

// A required pointer argument was NULL.
#define XVA_ERR_NULL_POINTER 5

// An internal invariant was violated; treat the library state as poisoned.
#define XVA_ERR_PANIC 6

// Collateral `kind`: uncollateralised, the balance is zero.
#define XVA_COLLATERAL_NONE 0

// Collateral `kind`: balance `alpha V^+ + beta V^-` tracking the clean
// value; `alpha = 0, beta = -1` is a one-way CSA posted by the issuer,
// `alpha = 1, beta = -1` a two-way CSA.
#define XVA_COLLATERAL_LINEAR 1

// Collateral `kind`: two-way balance observed `t0` years ago.
#define XVA_COLLATERAL_DELAYED 2

// Opaque finite-difference solution; query with `xva_fd_value_at` and
// release with `xva_fd_free`.
typedef struct XvaFdSolution XvaFdSolution;

// Lattice of the heat-kernel quadrature solver. `as_printed` selects the
// spatial-shift variant: 0 applies the slice-dependent shift, 1 the
// full-horizon shift kept for comparison studies.
typedef struct XvaQuadSpec {
  double delta_s;
  double delta_y;
  double y_max;
  int32_t as_printed;
} XvaQuadSpec;

// Market and credit parameters. `sigma` is the volatility, `r` the
// risk-free rate, `q_s` the repo/funding rate of the underlying,
// `gamma_s` its dividend yield, `lambda_b`/`lambda_c` the issuer and
// counterparty hazard rates, `recovery_b`/`recovery_c` the recoveries
// and `s_x` the spread paid on posted collateral.
typedef struct XvaMarketParams {
  double sigma;
  double r;
  double q_s;
  double gamma_s;
  double lambda_b;
  double lambda_c;
  double recovery_b;
  double recovery_c;
  double s_x;
} XvaMarketParams;

// European call: strike and maturity in years.
typedef struct XvaContract {
  double strike;
  double maturity;
} XvaContract;

// Collateral regime. `kind` selects one of the `XVA_COLLATERAL_*`
// constants; `alpha`/`beta` are read for the linear kind, `t0` for the
// delayed kind, the rest is ignored.
typedef struct XvaCollateral {
  int32_t kind;
  double alpha;
  double beta;
  double t0;
} XvaCollateral;

// Monte-Carlo controls: path count, time-quadrature step (must tile the
// horizon exactly), seed, and whether to mirror odd paths around the
// drift (`antithetic` nonzero).
typedef struct XvaMcSpec {
  uint64_t n_paths;
  double delta_s;
  uint64_t seed;
  int32_t antithetic;
} XvaMcSpec;

// Monte-Carlo estimate of the adjustment split into its four terms, with
// a standard error per term. `se_total` is measured on the per-path
// totals, so it accounts for correlation between terms.
typedef struct XvaMcResult {
  double u_cva;
  double u_dva;
  double u_fca;
  double u_colva;
  double u_total;
  double se_cva;
  double se_dva;
  double se_fca;
  double se_colva;
  double se_total;
} XvaMcResult;

// Source term of the adjustment equation split into its named pieces;
// `total` is their exact sum.
typedef struct XvaSourceTerm {
  double f_cva;
  double f_dva;
  double f_fca;
  double f_colva;
  double total;
} XvaSourceTerm;

// Spatial grid and reporting cadence of the finite-difference solver.
// The grid spans `[x_min, x_max]` in log-spot with step `delta_x`; the
// surface is reported every `delta_tau` up to `tau_end`.
typedef struct XvaGridSpec {
  double x_min;
  double x_max;
  double delta_x;
  double delta_tau;
  double tau_end;
} XvaGridSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *xva_version(void);

// Message of the most recent failure on the calling thread, empty when no
// call has failed yet. Valid until the next failing call on this thread.
const char *xva_last_error(void);

// The reference quadrature lattice used as the cross-solver benchmark.
struct XvaQuadSpec xva_quad_benchmark(void);

// Default-free European call price at calendar time `s` and spot `spot`.
//
// # Safety
// All pointers must be valid or NULL.
int32_t xva_bs_call(double s,
                    double spot,
                    const struct XvaMarketParams *params,
                    const struct XvaContract *contract,
                    double *out);

// Clean value `v(tau, x)` at time-to-maturity `tau` and log-spot `x`.
//
// # Safety
// All pointers must be valid or NULL.
int32_t xva_clean_value(double tau,
                        double x,
                        const struct XvaMarketParams *params,
                        const struct XvaContract *contract,
                        double *out);

// Closed-form adjustment at `(tau, x)`. Only defined for regimes where
// the exposure stays unsecured and non-negative; others return
// `XVA_ERR_UNSUPPORTED_REGIME`.
//
// # Safety
// All pointers must be valid or NULL.
int32_t xva_closed_form_u(double tau,
                          double x,
                          const struct XvaCollateral *collateral,
                          const struct XvaMarketParams *params,
                          const struct XvaContract *contract,
                          double *out);

// Heat-kernel quadrature evaluation of the adjustment at `(tau, x)`.
//
// # Safety
// All pointers must be valid or NULL.
int32_t xva_heat_kernel_u(double tau,
                          double x,
                          const struct XvaCollateral *collateral,
                          const struct XvaMarketParams *params,
                          const struct XvaContract *contract,
                          const struct XvaQuadSpec *quad,
                          double *out);

// Monte-Carlo estimate of the adjustment at `(tau, x)`. Deterministic for
// a fixed spec: the same seed reproduces the same result bit for bit.
//
// # Safety
// All pointers must be valid or NULL.
int32_t xva_mc_estimate(double tau,
                        double x,
                        const struct XvaCollateral *collateral,
                        const struct XvaMarketParams *params,
                        const struct XvaContract *contract,
                        const struct XvaMcSpec *mc,
                        struct XvaMcResult *out);

// Source term of the adjustment equation at `(tau, x)`.
//
// # Safety
// All pointers must be valid or NULL.
int32_t xva_source_term(double tau,
                        double x,
                        const struct XvaCollateral *collateral,
                        const struct XvaMarketParams *params,
                        const struct XvaContract *contract,
                        struct XvaSourceTerm *out);

// Runs the finite-difference solver and hands back an opaque solution.
// On success `*out` owns the handle; release it with `xva_fd_free`.
//
// # Safety
// All pointers must be valid or NULL.
int32_t xva_fd_solve(const struct XvaGridSpec *grid,
                     const struct XvaCollateral *collateral,
                     const struct XvaMarketParams *params,
                     const struct XvaContract *contract,
                     struct XvaFdSolution **out);

// Point query on a solved surface. `tau` must be one of the reporting
// times; `x` is interpolated linearly between grid nodes.
//
// # Safety
// `solution` must be a live handle from `xva_fd_solve`.
int32_t xva_fd_value_at(const struct XvaFdSolution *solution, double tau, double x, double *out);

// Releases a solution handle. NULL is ignored.
//
// # Safety
// `solution` must be NULL or a live handle from `xva_fd_solve`, and must
// not be used afterwards.
void xva_fd_free(struct XvaFdSolution *solution);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* XVA_H */
