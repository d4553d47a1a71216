#include <stdio.h>
#include "serialdep.h"

static double product(const double *path, size_t len, void *user_data) {
    (void)user_data;
    double p = 1.0;
    for (size_t i = 0; i < len; i++) p *= path[i];
    return p;
}

int main(void) {
    SdCost *cost = NULL;
    SdMarginal *marginal = NULL;
    SdCoefficient xi1;
    SdOracle oracle;
    double values[2] = {0.0, 1.0};
    double probs[2] = {0.3, 0.7};

    if (sd_cost_queue(0.8, 1.0, 30, SD_TAIL_PROBABILITY, 2.0, &cost) != SD_OK) {
        fprintf(stderr, "%s\n", sd_last_error_message());
        return 1;
    }
    sd_cost_baseline_marginal(cost, &marginal);
    sd_estimate_coefficient(cost, marginal, 1, 20, 100, 10, 42, 0.05, NULL, &xi1);
    sd_enumeration_oracle(values, probs, 2, product, NULL, 3, &oracle);
    printf("%s %f %f\n", sd_version(), xi1.point, oracle.xi1);
    sd_marginal_free(marginal);
    sd_cost_free(cost);
    return 0;
}
