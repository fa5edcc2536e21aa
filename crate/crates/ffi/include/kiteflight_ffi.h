#ifndef KITEFLIGHT_FFI_H
#define KITEFLIGHT_FFI_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum KfStatus {
  KF_STATUS_OK = 0,
  KF_STATUS_NULL_POINTER = 1,
  KF_STATUS_INVALID_ARGUMENT = 2,
  KF_STATUS_INVALID_CONFIG = 3,
  KF_STATUS_UNKNOWN_SCENARIO = 4,
  KF_STATUS_PARSE = 5,
  KF_STATUS_IO = 6,
  /**
   * The run has reached its duration; no tick was taken.
   */
  KF_STATUS_FINISHED = 7,
  /**
   * The operator command was refused by the mode machine.
   */
  KF_STATUS_COMMAND_REJECTED = 8,
  KF_STATUS_PANIC = 9,
} KfStatus;

/**
 * Controller mode, same codes as on the wire.
 */
typedef enum KfMode {
  KF_MODE_IDLE = 0,
  KF_MODE_TAKEOFF = 1,
  KF_MODE_RELEASE_TO_STATION = 2,
  KF_MODE_WIND_HOLD = 3,
  KF_MODE_MANUAL = 4,
} KfMode;

/**
 * Opaque simulation handle.
 */
typedef struct KfSim KfSim;

/**
 * Takeoff profile parameters.
 */
typedef struct KfTakeoffParams {
  double d_max_pct;
  double t_u_s;
  double t_d_s;
  double l_start_m;
  double pull_in_m;
} KfTakeoffParams;

/**
 * One control tick as logged by the ground station.
 */
typedef struct KfRecord {
  double t_s;
  double duty_pct;
  double wind_mps;
  double line_m;
  double alt_m;
  double tension_n;
  enum KfMode mode;
  uint16_t seq;
} KfRecord;

/**
 * Full plant and controller state between ticks.
 */
typedef struct KfState {
  uint64_t tick;
  double t_s;
  enum KfMode mode;
  double duty_pct;
  double x_m;
  double z_m;
  double vx_mps;
  double vz_mps;
  double tension_n;
  double line_m;
  double line_speed_mps;
  uint32_t stage_index;
  bool telemetry_lost;
  bool finished;
} KfState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code. Never null.
 */
const char *kf_status_message(enum KfStatus status);

/**
 * Detail of the last failure on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *kf_last_error(void);

/**
 * CRC-16/CCITT-FALSE of `len` bytes. A null `data` with `len` 0 is the empty input.
 *
 * # Safety
 * `data` must point to `len` readable bytes unless `len` is 0.
 */
uint16_t kf_crc16(const uint8_t *data, size_t len);

/**
 * Barometric altitude in metres for `pressure_pa` over `ground_pressure_pa`.
 */
double kf_baro_altitude(double pressure_pa, double ground_pressure_pa);

/**
 * Takeoff duty at `t_s` seconds after takeoff start with `line_m` paid out.
 * `t_c_s` carries the end of the hold phase between calls: pass NaN before
 * it has happened and keep what comes back.
 *
 * # Safety
 * `params`, `t_c_s` and `duty_out` must be valid pointers.
 */
enum KfStatus kf_takeoff_duty(double t_s,
                              double line_m,
                              const struct KfTakeoffParams *params,
                              double *t_c_s,
                              double *duty_out);

/**
 * One wind-hold update. `thresholds` holds `n_stages + 1` boundaries
 * starting at 0; the last may be `INFINITY`. `deltas` holds `n_stages`
 * non-increasing increments.
 *
 * # Safety
 * `thresholds` and `deltas` must point to the stated number of doubles and
 * `duty_out` must be valid.
 */
enum KfStatus kf_wind_hold_update(double duty_prev,
                                  double wind_mps,
                                  const double *thresholds,
                                  const double *deltas,
                                  size_t n_stages,
                                  double d_max_pct,
                                  double *duty_out);

/**
 * Create a run of `scenario` (a preset name or a JSON file path) for
 * `duration_s` seconds. `config_json` may be null for the defaults.
 *
 * # Safety
 * String arguments must be nul-terminated; `out` must be valid.
 */
enum KfStatus kf_sim_new(const char *scenario,
                         const char *config_json,
                         double duration_s,
                         uint64_t seed,
                         struct KfSim **out);

/**
 * Release a handle. Null is ignored.
 *
 * # Safety
 * `sim` must come from [`kf_sim_new`] and not be used afterwards.
 */
void kf_sim_free(struct KfSim *sim);

/**
 * Advance one control period. `record` may be null.
 *
 * # Safety
 * `sim` must be a live handle; `record`, if not null, must be valid.
 */
enum KfStatus kf_sim_tick(struct KfSim *sim, struct KfRecord *record);

/**
 * # Safety
 * `sim` must be a live handle and `out` valid.
 */
enum KfStatus kf_sim_state(const struct KfSim *sim, struct KfState *out);

/**
 * Operator command, applied from the next tick. `duty_pct` is only allowed
 * with MANUAL; pass NaN to leave it out.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum KfStatus kf_sim_command(struct KfSim *sim, enum KfMode mode, double duty_pct);

/**
 * Replace the wind-hold table, same layout as [`kf_wind_hold_update`].
 * The old table stays in force if the new one is invalid.
 *
 * # Safety
 * `sim` must be a live handle and the arrays hold the stated counts.
 */
enum KfStatus kf_sim_set_table(struct KfSim *sim,
                               const double *thresholds,
                               const double *deltas,
                               size_t n_stages);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KITEFLIGHT_FFI_H */
