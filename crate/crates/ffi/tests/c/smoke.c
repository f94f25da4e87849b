#include <stdio.h>
#include <string.h>
#include "beatdiag.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        BdStatus s_ = (call);                                              \
        if (s_ != BD_STATUS_OK) {                                          \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_,              \
                    bd_last_error_message());                              \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    double times[16];
    for (int i = 0; i < 16; i++) times[i] = 0.5 + 0.6 * i;

    BdBeats *ref = NULL;
    CHECK(bd_beats_new(times, 16, &ref));

    BdActivation *act = NULL;
    CHECK(bd_synthesize_gt(ref, 2.0, 43.07, &act));

    BdDbnConfig dbn = bd_dbn_config_default();
    dbn.min_bpm = 30.0;
    BdBeats *est = NULL;
    CHECK(bd_decode_dbn(act, &dbn, &est));

    BdEvalConfig ec = bd_eval_config_default();
    BdEvalResult r;
    CHECK(bd_evaluate(est, ref, &ec, &r));
    printf("f=%.3f n_est=%zu\n", r.f_measure, r.n_est);

    dbn.beat_region = BD_BEAT_REGION_CEIL;
    BdBeats *est_ceil = NULL;
    BdEvalResult rc;
    CHECK(bd_decode_dbn(act, &dbn, &est_ceil));
    CHECK(bd_evaluate(est_ceil, ref, &ec, &rc));
    bd_beats_free(est_ceil);
    if (rc.n_est == 0) return 5;

    BdActivation *bad = NULL;
    double oob[3] = {0.0, 2.0, 0.0};
    if (bd_activation_new(oob, 3, 100.0, &bad) != BD_STATUS_CORRUPT_ACTIVATION) return 2;
    if (strlen(bd_last_error_message()) == 0) return 3;

    bd_beats_free(est);
    bd_activation_free(act);
    bd_beats_free(ref);
    return r.f_measure > 0.9 ? 0 : 4;
}
