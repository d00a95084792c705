#include <math.h>
#include <stdio.h>
#include "splitsys.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            const char *msg = splitsys_last_error_message();          \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__,   \
                    #cond, msg ? msg : "-");                          \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    SplitsysInstance *inst = NULL;
    CHECK(splitsys_instance_generate(3, 2, 7, SPLITSYS_STRUCTURE_AFFINE_VI, &inst) == SPLITSYS_STATUS_OK);

    SplitsysParams *params = splitsys_params_new();
    CHECK(splitsys_params_set_delta(params, 2.0) == SPLITSYS_STATUS_INVALID_ARGUMENT);

    SplitsysResult *res = NULL;
    CHECK(splitsys_solve(inst, params, NULL, 0, &res) == SPLITSYS_STATUS_OK);
    CHECK(splitsys_result_status(res) == SPLITSYS_SOLVE_STATUS_SOLVED);

    double x[3], star[3];
    CHECK(splitsys_result_x_final(res, x, 3) == SPLITSYS_STATUS_OK);
    CHECK(splitsys_instance_known_solution(inst, star, 3) == SPLITSYS_STATUS_OK);
    for (int i = 0; i < 3; i++) CHECK(fabs(x[i] - star[i]) < 1e-4);

    char *csv = NULL;
    CHECK(splitsys_result_trace_csv(res, &csv) == SPLITSYS_STATUS_OK);
    printf("iterations=%zu residual=%.3e\n", splitsys_result_iterations(res),
           splitsys_result_final_residual(res));
    splitsys_string_free(csv);

    splitsys_result_free(res);
    splitsys_params_free(params);
    splitsys_instance_free(inst);
    return 0;
}
