/* cc -Icrates/ffi/include crates/ffi/examples/smoke.c target/release/libgsm_gof_ffi.a -lpthread -ldl -lm */
#include <stdio.h>
#include "gsm_gof.h"

int main(void) {
    GsmRegime *regime = NULL;
    if (gsm_regime_parse("mild-ordinary", 1.0, 1.0, &regime) != GSM_STATUS_OK) {
        fprintf(stderr, "%s\n", gsm_last_error());
        return 1;
    }

    GsmUpperBound upper;
    GsmStatus st = gsm_upper_bound(regime, 1e-3, 1e-3, 0.05, 0.5, 34.6740110027234, 10000, &upper);
    if (st != GSM_STATUS_OK) {
        fprintf(stderr, "%s\n", gsm_last_error());
        gsm_regime_free(regime);
        return 1;
    }
    printf("upper_sq=%.17g argmin_d=%zu M0=%zu M1=%zu\n", upper.radius_sq, upper.argmin_d, upper.m0, upper.m1);

    double theta0[1] = {0.3};
    GsmTestParams params = {1e-3, 1e-3, 0.05, 0.5, 34.6740110027234, 0, 10000};
    GsmErrorEstimate est;
    st = gsm_estimate_alpha(regime, theta0, 1, &params, 1000, 42, 0, &est);
    if (st == GSM_STATUS_OK) {
        printf("alpha_hat=%g se=%g\n", est.p_hat, est.se);
    }
    gsm_regime_free(regime);
    return st == GSM_STATUS_OK ? 0 : 1;
}
