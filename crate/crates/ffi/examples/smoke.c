/* Minimal C consumer of the nanorace C ABI. Exits 0 on success. */
#include <math.h>
#include <stdio.h>
#include "nanorace.h"

#define CHECK(expr)                                                   \
    do {                                                              \
        NrStatus s_ = (expr);                                         \
        if (s_ != NR_STATUS_OK) {                                     \
            char msg_[256];                                           \
            nr_last_error_message(msg_, sizeof msg_);                 \
            fprintf(stderr, "%s -> %d: %s\n", #expr, (int)s_, msg_);  \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    double s = 0.0;
    CHECK(nr_score(115.0, 0, 10, 5, &s));
    if (s != 5750.0) return 2;

    NrArena *arena = NULL;
    CHECK(nr_arena_new_default(&arena));
    double d = 0.0;
    uint8_t cls = 0;
    CHECK(nr_ray_cast(arena, -3.0, -3.0, 0.0, 20.0, false, &d, &cls));
    if (cls == NR_CLASS_NONE || !(d > 0.0)) return 3;

    uint8_t frame[NR_FRAME_LEN];
    NrProbsQ8 q = {10, 200, 30}, back;
    CHECK(nr_frame_encode(q, frame));
    CHECK(nr_frame_decode(frame, NR_FRAME_LEN, &back));
    if (back.center != 200) return 4;
    frame[4] ^= 1;
    if (nr_frame_decode(frame, NR_FRAME_LEN, &back) != NR_STATUS_BAD_CHECKSUM) return 5;

    NrPolicy *policy = NULL;
    CHECK(nr_policy_new(arena, NR_POLICY_2, 1.5, 7, &policy));
    NrProbs clear = {0.0, 0.0, 0.0};
    NrSetpoint sp;
    CHECK(nr_policy_step(policy, clear, -3.0, -3.0, 0.0, &sp));
    if (!(sp.forward_speed > 0.0)) return 6;
    nr_policy_free(policy);

    NrRunSummary run;
    CHECK(nr_run_episode(arena, "{\"timings\": {\"episode_length\": 5.0}}", 1, &run));
    if (!(run.total_distance > 0.0)) return 7;
    nr_arena_free(arena);
    printf("ok %s\n", nr_version());
    return 0;
}
