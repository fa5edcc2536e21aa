//! C ABI over the kiteflight simulator and controller laws.
//!
//! Every fallible call returns a [`KfStatus`]. On failure a description is
//! kept per thread and can be read with [`kf_last_error`]. Handles come from
//! [`kf_sim_new`] and must be released with [`kf_sim_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use kiteflight::config::{Config, ControllerConfig, WindholdTable};
use kiteflight::controller::{self, ControllerMode, ControllerState, OperatorCommand};
use kiteflight::scenarios::load_scenario;
use kiteflight::station::{FlightLogRecord, RunOptions, Session};
use kiteflight::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    UnknownScenario = 4,
    Parse = 5,
    Io = 6,
    /// The run has reached its duration; no tick was taken.
    Finished = 7,
    /// The operator command was refused by the mode machine.
    CommandRejected = 8,
    Panic = 9,
}

/// Controller mode, same codes as on the wire.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KfMode {
    Idle = 0,
    Takeoff = 1,
    ReleaseToStation = 2,
    WindHold = 3,
    Manual = 4,
}

impl From<ControllerMode> for KfMode {
    fn from(m: ControllerMode) -> Self {
        match m {
            ControllerMode::Idle => KfMode::Idle,
            ControllerMode::Takeoff => KfMode::Takeoff,
            ControllerMode::ReleaseToStation => KfMode::ReleaseToStation,
            ControllerMode::WindHold => KfMode::WindHold,
            ControllerMode::Manual => KfMode::Manual,
        }
    }
}

impl From<KfMode> for ControllerMode {
    fn from(m: KfMode) -> Self {
        ControllerMode::from_code(m as u8).expect("codes match")
    }
}

/// One control tick as logged by the ground station.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KfRecord {
    pub t_s: f64,
    pub duty_pct: f64,
    pub wind_mps: f64,
    pub line_m: f64,
    pub alt_m: f64,
    pub tension_n: f64,
    pub mode: KfMode,
    pub seq: u16,
}

impl From<&FlightLogRecord> for KfRecord {
    fn from(r: &FlightLogRecord) -> Self {
        Self {
            t_s: r.t_s,
            duty_pct: r.duty_pct,
            wind_mps: r.wind_mps,
            line_m: r.line_m,
            alt_m: r.alt_m,
            tension_n: r.tension_n,
            mode: r.mode.into(),
            seq: r.seq,
        }
    }
}

/// Full plant and controller state between ticks.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KfState {
    pub tick: u64,
    pub t_s: f64,
    pub mode: KfMode,
    pub duty_pct: f64,
    pub x_m: f64,
    pub z_m: f64,
    pub vx_mps: f64,
    pub vz_mps: f64,
    pub tension_n: f64,
    pub line_m: f64,
    pub line_speed_mps: f64,
    pub stage_index: u32,
    pub telemetry_lost: bool,
    pub finished: bool,
}

/// Takeoff profile parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KfTakeoffParams {
    pub d_max_pct: f64,
    pub t_u_s: f64,
    pub t_d_s: f64,
    pub l_start_m: f64,
    pub pull_in_m: f64,
}

/// Opaque simulation handle.
pub struct KfSim {
    session: Session,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(text).expect("no interior nul")));
}

fn fail(status: KfStatus, msg: impl Into<String>) -> KfStatus {
    set_error(msg);
    status
}

fn from_error(e: &Error) -> KfStatus {
    let status = match e {
        Error::Io { .. } => KfStatus::Io,
        Error::Parse(_) | Error::LogFormat { .. } | Error::Frame(_) => KfStatus::Parse,
        Error::Validation(_) => KfStatus::InvalidConfig,
        Error::Analysis(_) => KfStatus::InvalidArgument,
        Error::UnknownScenario(_) => KfStatus::UnknownScenario,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> KfStatus) -> KfStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(KfStatus::Panic, "internal panic"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, KfStatus> {
    if p.is_null() {
        return Err(fail(KfStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(KfStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, n: usize, name: &str) -> Result<&'a [f64], KfStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(KfStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

/// Static description of a status code. Never null.
#[no_mangle]
pub extern "C" fn kf_status_message(status: KfStatus) -> *const c_char {
    let s: &'static CStr = match status {
        KfStatus::Ok => c"ok",
        KfStatus::NullPointer => c"null pointer argument",
        KfStatus::InvalidArgument => c"invalid argument",
        KfStatus::InvalidConfig => c"invalid configuration",
        KfStatus::UnknownScenario => c"unknown scenario",
        KfStatus::Parse => c"parse error",
        KfStatus::Io => c"i/o error",
        KfStatus::Finished => c"run finished",
        KfStatus::CommandRejected => c"command rejected",
        KfStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Detail of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn kf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// CRC-16/CCITT-FALSE of `len` bytes. A null `data` with `len` 0 is the empty input.
///
/// # Safety
/// `data` must point to `len` readable bytes unless `len` is 0.
#[no_mangle]
pub unsafe extern "C" fn kf_crc16(data: *const u8, len: usize) -> u16 {
    if len == 0 || data.is_null() {
        return kiteflight::telemetry::crc16_ccitt_false(&[]);
    }
    kiteflight::telemetry::crc16_ccitt_false(std::slice::from_raw_parts(data, len))
}

/// Barometric altitude in metres for `pressure_pa` over `ground_pressure_pa`.
#[no_mangle]
pub extern "C" fn kf_baro_altitude(pressure_pa: f64, ground_pressure_pa: f64) -> f64 {
    kiteflight::sensors::baro_altitude(pressure_pa, ground_pressure_pa)
}

/// Takeoff duty at `t_s` seconds after takeoff start with `line_m` paid out.
/// `t_c_s` carries the end of the hold phase between calls: pass NaN before
/// it has happened and keep what comes back.
///
/// # Safety
/// `params`, `t_c_s` and `duty_out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn kf_takeoff_duty(
    t_s: f64,
    line_m: f64,
    params: *const KfTakeoffParams,
    t_c_s: *mut f64,
    duty_out: *mut f64,
) -> KfStatus {
    guard(|| {
        if params.is_null() || t_c_s.is_null() || duty_out.is_null() {
            return fail(KfStatus::NullPointer, "null argument");
        }
        let p = *params;
        let cfg = ControllerConfig {
            d_max: p.d_max_pct,
            t_u: p.t_u_s,
            t_d: p.t_d_s,
            l_start: p.l_start_m,
            pull_in: p.pull_in_m,
            ..Default::default()
        };
        let bad = cfg.validate();
        if !bad.is_empty() {
            return from_error(&Error::Validation(bad));
        }
        let t_c = *t_c_s;
        let state = ControllerState {
            t_c: (!t_c.is_nan()).then_some(t_c),
            ..ControllerState::in_mode(ControllerMode::Takeoff, 0.0)
        };
        let (duty, next) = controller::takeoff_duty(t_s, line_m, &cfg, &state);
        *duty_out = duty;
        *t_c_s = next.t_c.unwrap_or(f64::NAN);
        KfStatus::Ok
    })
}

/// One wind-hold update. `thresholds` holds `n_stages + 1` boundaries
/// starting at 0; the last may be `INFINITY`. `deltas` holds `n_stages`
/// non-increasing increments.
///
/// # Safety
/// `thresholds` and `deltas` must point to the stated number of doubles and
/// `duty_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kf_wind_hold_update(
    duty_prev: f64,
    wind_mps: f64,
    thresholds: *const f64,
    deltas: *const f64,
    n_stages: usize,
    d_max_pct: f64,
    duty_out: *mut f64,
) -> KfStatus {
    guard(|| {
        if duty_out.is_null() {
            return fail(KfStatus::NullPointer, "duty_out is null");
        }
        let th = match slice_arg(thresholds, n_stages + 1, "thresholds") {
            Ok(s) => s,
            Err(e) => return e,
        };
        let de = match slice_arg(deltas, n_stages, "deltas") {
            Ok(s) => s,
            Err(e) => return e,
        };
        let cfg = ControllerConfig {
            thresholds: th.to_vec(),
            deltas: de.to_vec(),
            d_max: d_max_pct,
            ..Default::default()
        };
        let bad = cfg.validate();
        if !bad.is_empty() {
            return from_error(&Error::Validation(bad));
        }
        if !wind_mps.is_finite() || wind_mps < 0.0 {
            return fail(KfStatus::InvalidArgument, "wind must be finite and non-negative");
        }
        *duty_out = controller::wind_hold_update(duty_prev, wind_mps, &cfg);
        KfStatus::Ok
    })
}

/// Create a run of `scenario` (a preset name or a JSON file path) for
/// `duration_s` seconds. `config_json` may be null for the defaults.
///
/// # Safety
/// String arguments must be nul-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kf_sim_new(
    scenario: *const c_char,
    config_json: *const c_char,
    duration_s: f64,
    seed: u64,
    out: *mut *mut KfSim,
) -> KfStatus {
    guard(|| {
        if out.is_null() {
            return fail(KfStatus::NullPointer, "out is null");
        }
        *out = std::ptr::null_mut();
        let name = match str_arg(scenario, "scenario") {
            Ok(s) => s,
            Err(e) => return e,
        };
        let cfg = if config_json.is_null() {
            Config::default()
        } else {
            let text = match str_arg(config_json, "config_json") {
                Ok(s) => s,
                Err(e) => return e,
            };
            match Config::from_json_str(text) {
                Ok(c) => c,
                Err(e) => return from_error(&e),
            }
        };
        let scenario = match load_scenario(name) {
            Ok(s) => s,
            Err(e) => return from_error(&e),
        };
        match Session::new(&cfg, &scenario, duration_s, &RunOptions::with_seed(seed)) {
            Ok(session) => {
                *out = Box::into_raw(Box::new(KfSim { session }));
                KfStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `sim` must come from [`kf_sim_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kf_sim_free(sim: *mut KfSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advance one control period. `record` may be null.
///
/// # Safety
/// `sim` must be a live handle; `record`, if not null, must be valid.
#[no_mangle]
pub unsafe extern "C" fn kf_sim_tick(sim: *mut KfSim, record: *mut KfRecord) -> KfStatus {
    guard(|| {
        let Some(sim) = sim.as_mut() else {
            return fail(KfStatus::NullPointer, "sim is null");
        };
        match sim.session.tick() {
            Some(r) => {
                if !record.is_null() {
                    *record = KfRecord::from(&r);
                }
                KfStatus::Ok
            }
            None => KfStatus::Finished,
        }
    })
}

/// # Safety
/// `sim` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn kf_sim_state(sim: *const KfSim, out: *mut KfState) -> KfStatus {
    guard(|| {
        let Some(sim) = sim.as_ref() else {
            return fail(KfStatus::NullPointer, "sim is null");
        };
        if out.is_null() {
            return fail(KfStatus::NullPointer, "out is null");
        }
        let s = sim.session.snapshot();
        *out = KfState {
            tick: s.tick,
            t_s: s.t_s,
            mode: s.mode.into(),
            duty_pct: s.duty_pct,
            x_m: s.kite.x,
            z_m: s.kite.z,
            vx_mps: s.kite.vx,
            vz_mps: s.kite.vz,
            tension_n: s.kite.tension,
            line_m: s.winch.line_out,
            line_speed_mps: s.winch.line_speed,
            stage_index: s.stage_index as u32,
            telemetry_lost: s.telemetry_lost,
            finished: s.finished,
        };
        KfStatus::Ok
    })
}

/// Operator command, applied from the next tick. `duty_pct` is only allowed
/// with MANUAL; pass NaN to leave it out.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kf_sim_command(sim: *mut KfSim, mode: KfMode, duty_pct: f64) -> KfStatus {
    guard(|| {
        let Some(sim) = sim.as_mut() else {
            return fail(KfStatus::NullPointer, "sim is null");
        };
        let cmd = OperatorCommand {
            mode: mode.into(),
            duty: (!duty_pct.is_nan()).then_some(duty_pct),
        };
        match sim.session.command(&cmd) {
            Ok(()) => KfStatus::Ok,
            Err(e) => fail(KfStatus::CommandRejected, e.to_string()),
        }
    })
}

/// Replace the wind-hold table, same layout as [`kf_wind_hold_update`].
/// The old table stays in force if the new one is invalid.
///
/// # Safety
/// `sim` must be a live handle and the arrays hold the stated counts.
#[no_mangle]
pub unsafe extern "C" fn kf_sim_set_table(
    sim: *mut KfSim,
    thresholds: *const f64,
    deltas: *const f64,
    n_stages: usize,
) -> KfStatus {
    guard(|| {
        let Some(sim) = sim.as_mut() else {
            return fail(KfStatus::NullPointer, "sim is null");
        };
        let th = match slice_arg(thresholds, n_stages + 1, "thresholds") {
            Ok(s) => s,
            Err(e) => return e,
        };
        let de = match slice_arg(deltas, n_stages, "deltas") {
            Ok(s) => s,
            Err(e) => return e,
        };
        let table = WindholdTable {
            thresholds_mps: th.to_vec(),
            deltas_pct: de.to_vec(),
            period_s: None,
        };
        match sim.session.set_windhold_table(&table) {
            Ok(()) => KfStatus::Ok,
            Err(v) => from_error(&Error::Validation(v)),
        }
    })
}
