#ifndef BEATDIAG_H
#define BEATDIAG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Beat-state count per period: `round(τ/λ)` or `ceil(τ/λ)`, at least 1.
 */
typedef enum BdBeatRegion {
  BD_BEAT_REGION_ROUND = 0,
  BD_BEAT_REGION_CEIL = 1,
} BdBeatRegion;

typedef enum BdStatus {
  BD_STATUS_OK = 0,
  BD_STATUS_NULL_POINTER = 1,
  BD_STATUS_INVALID_ARGUMENT = 2,
  BD_STATUS_IO = 3,
  BD_STATUS_PARSE = 4,
  BD_STATUS_CORRUPT_ACTIVATION = 5,
  BD_STATUS_CONFIG = 6,
  BD_STATUS_INSUFFICIENT_REFERENCE = 7,
  BD_STATUS_NO_OVERLAP = 8,
  BD_STATUS_CONSTRAINT = 9,
  BD_STATUS_PANIC = 10,
} BdStatus;

/**
 * Opaque activation curve.
 */
typedef struct BdActivation BdActivation;

/**
 * Opaque beat sequence, times in seconds, ascending.
 */
typedef struct BdBeats BdBeats;

typedef struct BdDbnConfig {
  double min_bpm;
  double max_bpm;
  double transition_lambda;
  uint32_t observation_lambda;
  bool correct_beats;
  enum BdBeatRegion beat_region;
} BdDbnConfig;

typedef struct BdPeakConfig {
  double threshold;
  double min_separation;
} BdPeakConfig;

typedef struct BdEvalConfig {
  double f_window;
  double continuity_phase_tol;
  double continuity_tempo_tol;
  double trim_seconds;
} BdEvalConfig;

typedef struct BdEvalResult {
  double f_measure;
  double cmlc;
  double cmlt;
  double amlc;
  double amlt;
  size_t n_ref;
  size_t n_est;
} BdEvalResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next `bd_*` call on the same thread.
 */
const char *bd_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bd_version(void);

struct BdDbnConfig bd_dbn_config_default(void);

struct BdPeakConfig bd_peak_config_default(void);

struct BdEvalConfig bd_eval_config_default(void);

/**
 * Copies `len` values in [0, 1] into a new activation.
 *
 * # Safety
 * `values` must point to `len` readable doubles; `out` must be writable.
 */
enum BdStatus bd_activation_new(const double *values,
                                size_t len,
                                double fps,
                                struct BdActivation **out);

/**
 * Loads a text or binary activation file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum BdStatus bd_activation_load(const char *path, struct BdActivation **out);

/**
 * # Safety
 * `act` must be null or a live handle.
 */
size_t bd_activation_len(const struct BdActivation *act);

/**
 * # Safety
 * `act` must be null or a live handle.
 */
double bd_activation_fps(const struct BdActivation *act);

/**
 * Pointer to the activation values, valid while the handle lives.
 *
 * # Safety
 * `act` must be null or a live handle.
 */
const double *bd_activation_data(const struct BdActivation *act);

/**
 * # Safety
 * `act` must be null or a handle not yet freed.
 */
void bd_activation_free(struct BdActivation *act);

/**
 * Copies `len` beat times (seconds, any order) into a new sequence.
 *
 * # Safety
 * `times` must point to `len` readable doubles; `out` must be writable.
 */
enum BdStatus bd_beats_new(const double *times, size_t len, struct BdBeats **out);

/**
 * Loads a beat annotation file (one time per line, first column).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum BdStatus bd_beats_load(const char *path, struct BdBeats **out);

/**
 * # Safety
 * `beats` must be null or a live handle.
 */
size_t bd_beats_len(const struct BdBeats *beats);

/**
 * Pointer to the beat times, valid while the handle lives.
 *
 * # Safety
 * `beats` must be null or a live handle.
 */
const double *bd_beats_data(const struct BdBeats *beats);

/**
 * # Safety
 * `beats` must be null or a handle not yet freed.
 */
void bd_beats_free(struct BdBeats *beats);

/**
 * Viterbi decoding with the bar-pointer model.
 *
 * # Safety
 * `act` and `cfg` must be live; `out` must be writable.
 */
enum BdStatus bd_decode_dbn(const struct BdActivation *act,
                            const struct BdDbnConfig *cfg,
                            struct BdBeats **out);

/**
 * Decoding restricted to `center_bpm · (1 ± window_fraction)`.
 *
 * # Safety
 * `act` and `cfg` must be live; `out` must be writable.
 */
enum BdStatus bd_decode_dbn_constrained(const struct BdActivation *act,
                                        const struct BdDbnConfig *cfg,
                                        double center_bpm,
                                        double window_fraction,
                                        struct BdBeats **out);

/**
 * # Safety
 * `act` and `cfg` must be live; `out` must be writable.
 */
enum BdStatus bd_pick_peaks(const struct BdActivation *act,
                            const struct BdPeakConfig *cfg,
                            struct BdBeats **out);

/**
 * Scores `estimate` against `reference`.
 *
 * # Safety
 * All pointers must be live; `out` must be writable.
 */
enum BdStatus bd_evaluate(const struct BdBeats *estimate,
                          const struct BdBeats *reference,
                          const struct BdEvalConfig *cfg,
                          struct BdEvalResult *out);

/**
 * Gaussian activation centred on each reference beat.
 *
 * # Safety
 * `reference` must be live; `out` must be writable.
 */
enum BdStatus bd_synthesize_gt(const struct BdBeats *reference,
                               double sigma_frames,
                               double fps,
                               struct BdActivation **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BEATDIAG_H */
