#include <math.h>
#include <stdio.h>
#include "rcgain.h"

int main(void) {
    const char *spec = "num = 1\nden = 1, -0.5\n";
    RcgSystem *sys = NULL;
    if (rcg_system_from_spec(spec, &sys) != RCG_STATUS_OK) {
        fprintf(stderr, "spec: %s\n", rcg_last_error());
        return 1;
    }
    double value = 0.0, omega = 1.0;
    if (rcg_hinf_oracle(sys, 256, &value, &omega) != RCG_STATUS_OK || fabs(value - 2.0) > 1e-12) {
        fprintf(stderr, "oracle: %g\n", value);
        return 1;
    }
    RcgEstimateOptions opts = rcg_estimate_options_default(8);
    opts.ideal_plant = 1;
    RcgEstimateResult res;
    if (rcg_estimate(sys, &opts, &res) != RCG_STATUS_OK || fabs(res.estimate - 2.0) > 1e-6) {
        fprintf(stderr, "estimate: %s\n", rcg_last_error());
        return 1;
    }
    double a[4];
    if (rcg_circulant_coefficients(sys, 8, a, 4) != RCG_STATUS_BUFFER_TOO_SMALL) {
        return 1;
    }
    rcg_system_free(sys);
    printf("ok %.12f\n", res.estimate);
    return 0;
}
