#ifndef HYPBSQ_H
#define HYPBSQ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HypbsqStatus {
  HYPBSQ_STATUS_OK = 0,
  HYPBSQ_STATUS_NULL_ARGUMENT = 1,
  HYPBSQ_STATUS_INVALID_UTF8 = 2,
  HYPBSQ_STATUS_VALIDATION = 3,
  HYPBSQ_STATUS_PARSE = 4,
  HYPBSQ_STATUS_DOMAIN = 5,
  HYPBSQ_STATUS_RUNTIME = 6,
  HYPBSQ_STATUS_NOT_BLOW_UP = 7,
  HYPBSQ_STATUS_OUT_OF_RANGE = 8,
  HYPBSQ_STATUS_PANIC = 9,
} HypbsqStatus;

typedef enum HypbsqStopReason {
  HYPBSQ_STOP_REASON_TIME_REACHED = 0,
  HYPBSQ_STOP_REASON_PHI_THRESHOLD = 1,
  HYPBSQ_STOP_REASON_STEP_COLLAPSE = 2,
  HYPBSQ_STOP_REASON_FRONT_HIT_LEFT_EDGE = 3,
} HypbsqStopReason;

/**
 * Opaque scenario configuration.
 */
typedef struct HypbsqConfig HypbsqConfig;

/**
 * Opaque finished run.
 */
typedef struct HypbsqRun HypbsqRun;

/**
 * One diagnostics sample. Optional values are NaN when their flag is 0.
 */
typedef struct HypbsqSeriesRow {
  double t;
  double phi_left;
  double sup_omega;
  double bkm;
  double f1;
  double f2;
  double delta;
  double gamma_est;
  double tail_bound;
  uint8_t has_f1;
  uint8_t has_f2;
  uint8_t has_gamma_est;
} HypbsqSeriesRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. Valid until the next call.
 */
const char *hypbsq_last_error(void);

/**
 * Default configuration for `scenario` ("euler", "boussinesq" or "custom").
 *
 * # Safety
 * `scenario` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HypbsqStatus hypbsq_config_default(const char *scenario, struct HypbsqConfig **out);

/**
 * Parse key=value config text (a run manifest also works).
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HypbsqStatus hypbsq_config_parse(const char *text, struct HypbsqConfig **out);

/**
 * Set one config key.
 *
 * # Safety
 * `config` must come from this library; `key` and `value` must be NUL-terminated.
 */
enum HypbsqStatus hypbsq_config_set(struct HypbsqConfig *config,
                                    const char *key,
                                    const char *value);

/**
 * Check the config invariants without running.
 *
 * # Safety
 * `config` must come from this library.
 */
enum HypbsqStatus hypbsq_config_validate(const struct HypbsqConfig *config);

/**
 * Serialize the config; release the string with [`hypbsq_string_free`].
 *
 * # Safety
 * `config` must come from this library and `out` be a valid pointer.
 */
enum HypbsqStatus hypbsq_config_to_string(const struct HypbsqConfig *config, char **out);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void hypbsq_string_free(char *s);

/**
 * # Safety
 * `config` must come from this library or be null.
 */
void hypbsq_config_free(struct HypbsqConfig *config);

/**
 * Integrate the scenario. Blow-up is a normal outcome, reported by [`hypbsq_run_status`].
 *
 * # Safety
 * `config` must come from this library and `out` be a valid pointer.
 */
enum HypbsqStatus hypbsq_run(const struct HypbsqConfig *config, struct HypbsqRun **out);

/**
 * Stop reason and stop time of a finished run.
 *
 * # Safety
 * `run` must come from this library; `reason` and `t` must be valid pointers.
 */
enum HypbsqStatus hypbsq_run_status(const struct HypbsqRun *run,
                                    enum HypbsqStopReason *reason,
                                    double *t);

/**
 * Number of recorded samples; 0 for a null handle.
 *
 * # Safety
 * `run` must come from this library or be null.
 */
size_t hypbsq_run_series_len(const struct HypbsqRun *run);

/**
 * Copy sample `index` into `out`.
 *
 * # Safety
 * `run` must come from this library and `out` be a valid pointer.
 */
enum HypbsqStatus hypbsq_run_series_row(const struct HypbsqRun *run,
                                        size_t index,
                                        struct HypbsqSeriesRow *out);

/**
 * Blow-up time estimate; fails with `NotBlowUp` for runs that reached their end time.
 *
 * # Safety
 * `run` must come from this library; `tb` and `uncertainty` must be valid pointers.
 */
enum HypbsqStatus hypbsq_run_blowup_time(const struct HypbsqRun *run,
                                         double *tb,
                                         double *uncertainty);

/**
 * # Safety
 * `run` must come from this library or be null.
 */
void hypbsq_run_free(struct HypbsqRun *run);

/**
 * `(x1, x2) -> (z1, z2)`; fails with `Domain` unless both inputs are positive.
 *
 * # Safety
 * `z1` and `z2` must be valid pointers.
 */
enum HypbsqStatus hypbsq_x_to_z(double x1, double x2, double *z1, double *z2);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPBSQ_H */
