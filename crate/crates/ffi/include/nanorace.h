#ifndef NANORACE_H
#define NANORACE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Surface class codes as returned by ray casts.
 */
#define NR_CLASS_NONE 0

#define NR_CLASS_OBSTACLE 1

#define NR_CLASS_GATE_FRAME 2

#define NR_CLASS_WALL 3

#define NR_CLASS_OUT_OF_AREA_GROUND 4

/**
 * Policy kinds accepted by `nr_policy_new`.
 */
#define NR_POLICY_BASELINE 0

#define NR_POLICY_1 1

#define NR_POLICY_2 2

/**
 * Length of an encoded wire frame.
 */
#define NR_FRAME_LEN 5

/**
 * Status code returned by every fallible function.
 */
typedef enum {
  NR_STATUS_OK = 0,
  NR_STATUS_NULL_POINTER = 1,
  NR_STATUS_INVALID_ARGUMENT = 2,
  NR_STATUS_INVALID_CONFIG = 3,
  NR_STATUS_BAD_HEADER = 4,
  NR_STATUS_BAD_CHECKSUM = 5,
  NR_STATUS_SHORT_FRAME = 6,
  NR_STATUS_LONG_FRAME = 7,
  NR_STATUS_INVALID_MULTIPLIER = 8,
  NR_STATUS_PANIC = 9,
} NrStatus;

/**
 * Opaque arena handle.
 */
typedef struct NrArena NrArena;

/**
 * Opaque closed-loop policy handle: parameters, state and its random stream.
 */
typedef struct NrPolicy NrPolicy;

/**
 * Per-sector collision probabilities in `[0, 1]`.
 */
typedef struct {
  double left;
  double center;
  double right;
} NrProbs;

/**
 * Per-sector 8-bit probability codes.
 */
typedef struct {
  uint8_t left;
  uint8_t center;
  uint8_t right;
} NrProbsQ8;

/**
 * Velocity command: forward speed (m/s) and yaw rate (rad/s, counterclockwise positive).
 */
typedef struct {
  double forward_speed;
  double yaw_rate;
} NrSetpoint;

/**
 * Outcome of one simulated episode.
 */
typedef struct {
  double distance_in_area;
  double total_distance;
  double time_outside_fraction;
  double duration;
  uint32_t gates;
  uint32_t exits;
  uint32_t crashes;
  uint32_t laps;
} NrRunSummary;

/**
 * Dead-reckoning drift model; sigmas per √s, biases per s.
 */
typedef struct {
  double sigma_x;
  double sigma_y;
  double sigma_yaw;
  double bias_x;
  double bias_y;
  double bias_yaw;
} NrErrorModel;

/**
 * Summary of a Monte Carlo safety-margin study (L∞ metric, bbox of the nominal).
 */
typedef struct {
  double margin_median;
  double margin_p95;
  double fraction_within_1m;
  double fraction_within_2m;
} NrMarginSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *nr_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL.
 *
 * # Safety
 * `buf` must be NULL or point to `len` writable bytes.
 */
size_t nr_last_error_message(char *buf, size_t len);

/**
 * Creates the default arena layout.
 *
 * # Safety
 * `out` must be NULL or a valid pointer.
 */
NrStatus nr_arena_new_default(NrArena **out);

/**
 * Creates an arena from a layout JSON document.
 *
 * # Safety
 * `json` must be NULL or a NUL-terminated string; `out` must be NULL or valid.
 */
NrStatus nr_arena_new_from_json(const char *json, NrArena **out);

/**
 * Releases an arena.
 *
 * # Safety
 * `arena` must be NULL or a handle from `nr_arena_new_*` not yet freed.
 */
void nr_arena_free(NrArena *arena);

/**
 * Casts a ray; `*out_distance` is `INFINITY` and `*out_class` is
 * `NR_CLASS_NONE` when nothing lies within `max_range`.
 *
 * # Safety
 * All pointers must be NULL or valid.
 */
NrStatus nr_ray_cast(const NrArena *arena,
                     double x,
                     double y,
                     double angle,
                     double max_range,
                     bool ground_aware,
                     double *out_distance,
                     uint8_t *out_class);

/**
 * Whether `(x, y)` lies in the mission area (boundary inclusive).
 *
 * # Safety
 * All pointers must be NULL or valid.
 */
NrStatus nr_in_mission_area(const NrArena *arena, double x, double y, bool *out);

/**
 * Ideal-perception probabilities and binary labels at a pose, with the
 * default sensor geometry. Either out-pointer may be NULL.
 *
 * # Safety
 * `arena` must be valid; `out_probs` NULL or valid; `out_labels` NULL or 3 writable bytes.
 */
NrStatus nr_perceive(const NrArena *arena,
                     double x,
                     double y,
                     double yaw,
                     bool ground_aware,
                     NrProbs *out_probs,
                     uint8_t *out_labels);

/**
 * Quantizes probabilities to 8-bit codes (values are clamped to `[0, 1]`).
 */
NrProbsQ8 nr_quantize(NrProbs p);

NrProbs nr_dequantize(NrProbsQ8 q);

/**
 * Encodes a frame into `out[0..5]`.
 *
 * # Safety
 * `out` must be NULL or point to `NR_FRAME_LEN` writable bytes.
 */
NrStatus nr_frame_encode(NrProbsQ8 q, uint8_t *out);

/**
 * Decodes and validates a frame of `len` bytes.
 *
 * # Safety
 * `bytes` must be NULL or point to `len` readable bytes; `out` NULL or valid.
 */
NrStatus nr_frame_decode(const uint8_t *bytes, size_t len, NrProbsQ8 *out);

/**
 * Competition score for an in-area distance (m) and gate count.
 *
 * # Safety
 * `out` must be NULL or valid.
 */
NrStatus nr_score(double distance,
                  uint32_t gates,
                  uint32_t alpha_env,
                  uint32_t alpha_comp,
                  double *out);

/**
 * Creates a policy with default parameters for `kind` (`NR_POLICY_*`) and
 * target speed, flying the waypoints of `arena`. `seed` drives spin draws.
 *
 * # Safety
 * `arena` must be valid; `out` NULL or valid.
 */
NrStatus nr_policy_new(const NrArena *arena,
                       uint32_t kind,
                       double v_target,
                       uint64_t seed,
                       NrPolicy **out);

/**
 * Advances the policy by one decision given filtered probabilities and the
 * estimated pose.
 *
 * # Safety
 * `policy` must be a live handle; `out` NULL or valid.
 */
NrStatus nr_policy_step(NrPolicy *policy,
                        NrProbs probs,
                        double x,
                        double y,
                        double yaw,
                        NrSetpoint *out);

/**
 * Index of the waypoint the policy is currently flying to.
 *
 * # Safety
 * `policy` must be a live handle; `out` NULL or valid.
 */
NrStatus nr_policy_waypoint(const NrPolicy *policy, uint32_t *out);

/**
 * Releases a policy.
 *
 * # Safety
 * `policy` must be NULL or a handle from `nr_policy_new` not yet freed.
 */
void nr_policy_free(NrPolicy *policy);

/**
 * Simulates one episode. `config_json` is an episode configuration document,
 * or NULL for the defaults.
 *
 * # Safety
 * `arena` must be valid; `config_json` NULL or NUL-terminated; `out` NULL or valid.
 */
NrStatus nr_run_episode(const NrArena *arena,
                        const char *config_json,
                        uint64_t seed,
                        NrRunSummary *out);

/**
 * Monte Carlo safety-margin study of a nominal trajectory sampled every `dt`
 * seconds. `out_margins` may be NULL, else it receives `n` per-realization margins.
 *
 * # Safety
 * `xs`, `ys`, `yaws` must each point to `len` readable doubles; `model` and
 * `out` must be valid; `out_margins` NULL or `n` writable doubles.
 */
NrStatus nr_margin_study(const double *xs,
                         const double *ys,
                         const double *yaws,
                         size_t len,
                         double dt,
                         const NrErrorModel *model,
                         size_t n,
                         uint64_t seed,
                         NrMarginSummary *out,
                         double *out_margins);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NANORACE_H */
