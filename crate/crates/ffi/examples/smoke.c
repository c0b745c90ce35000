/* Minimal C consumer of the xva ABI: prices the reference call, checks the
 * finite-difference surface against the closed form, and exercises the
 * error path.
 *
 * Build (from the repository root, after `cargo build -p xva-ffi`):
 *
 *   gcc -std=c99 -Wall -Wextra -Icrates/ffi/include \
 *       crates/ffi/examples/smoke.c target/debug/libxva_ffi.a \
 *       -lm -lpthread -ldl -o smoke && ./smoke
 */

#include <stdio.h>
#include <math.h>
#include "xva.h"

int main(void) {
    XvaMarketParams p = {0.25, 0.03, 0.03, 0.0, 0.02, 0.05, 0.4, 0.4, 0.012};
    XvaContract c = {15.0, 2.0};
    XvaCollateral none = {XVA_COLLATERAL_NONE, 0.0, 0.0, 0.0};
    double u = 0.0;
    int rc = xva_closed_form_u(2.0, log(12.0), &none, &p, &c, &u);
    if (rc != XVA_OK) {
        fprintf(stderr, "closed form rc=%d: %s\n", rc, xva_last_error());
        return 1;
    }
    printf("closed form u = %.17g\n", u);

    XvaFdSolution *sol = NULL;
    XvaGridSpec g = {-5.0, 5.0, 0.0625, 0.25, 2.0};
    rc = xva_fd_solve(&g, &none, &p, &c, &sol);
    if (rc != XVA_OK) {
        fprintf(stderr, "fd solve rc=%d: %s\n", rc, xva_last_error());
        return 1;
    }
    double ufd = 0.0;
    rc = xva_fd_value_at(sol, 2.0, log(12.0), &ufd);
    xva_fd_free(sol);
    if (rc != XVA_OK) {
        fprintf(stderr, "fd query rc=%d: %s\n", rc, xva_last_error());
        return 1;
    }
    printf("fd u          = %.17g (gap %.2e)\n", ufd, fabs(ufd - u));

    rc = xva_closed_form_u(2.0, log(12.0), &none, &p, NULL, &u);
    if (rc != XVA_ERR_NULL_POINTER) {
        fprintf(stderr, "null check failed, rc=%d\n", rc);
        return 1;
    }
    printf("null rejected: %s\n", xva_last_error());
    printf("version %s\n", xva_version());
    return 0;
}
