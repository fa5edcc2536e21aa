//! Winch control laws and the mode machine that sequences them.
//!
//! * Takeoff: ramp the duty to `d_max` over `t_u`, hold it while the line is
//!   longer than `l_start - pull_in`, then ramp down over `t_d`.
//! * Release: hold a low duty so tension pays the line out to the station
//!   length.
//! * Wind hold: every period add the increment of the band the measured wind
//!   speed falls in: `duty(k) = duty(k-1) + deltas[stage - 1]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ControllerConfig;
use crate::sensors::SensorReading;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ControllerMode {
    Idle,
    Takeoff,
    ReleaseToStation,
    WindHold,
    Manual,
}

impl ControllerMode {
    pub const ALL: [ControllerMode; 5] = [
        ControllerMode::Idle,
        ControllerMode::Takeoff,
        ControllerMode::ReleaseToStation,
        ControllerMode::WindHold,
        ControllerMode::Manual,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ControllerMode::Idle => "IDLE",
            ControllerMode::Takeoff => "TAKEOFF",
            ControllerMode::ReleaseToStation => "RELEASE_TO_STATION",
            ControllerMode::WindHold => "WIND_HOLD",
            ControllerMode::Manual => "MANUAL",
        }
    }

    /// Wire code used by COMMAND frames.
    pub fn code(self) -> u8 {
        match self {
            ControllerMode::Idle => 0,
            ControllerMode::Takeoff => 1,
            ControllerMode::ReleaseToStation => 2,
            ControllerMode::WindHold => 3,
            ControllerMode::Manual => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.code() == code)
    }
}

impl std::str::FromStr for ControllerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.to_ascii_uppercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == upper || (upper == "RELEASE" && *m == ControllerMode::ReleaseToStation))
            .ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

impl std::fmt::Display for ControllerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub mode: ControllerMode,
    /// Last commanded duty, percent.
    pub duty: f64,
    /// Simulation time at which the current takeoff started, s.
    pub takeoff_t0: f64,
    /// Takeoff time (since `takeoff_t0`) at which the hold branch ended.
    pub t_c: Option<f64>,
    /// Wind-hold stage used on the last tick, 1-based; 0 before any.
    pub stage_index: usize,
    /// Operator duty applied in MANUAL, percent.
    pub manual_duty: f64,
    /// Set while the latest sensor reading is older than two periods.
    pub telemetry_lost: bool,
}

impl Default for ControllerState {
    fn default() -> Self {
        Self {
            mode: ControllerMode::Idle,
            duty: 0.0,
            takeoff_t0: 0.0,
            t_c: None,
            stage_index: 0,
            manual_duty: 0.0,
            telemetry_lost: false,
        }
    }
}

impl ControllerState {
    pub fn in_mode(mode: ControllerMode, t: f64) -> Self {
        Self {
            mode,
            takeoff_t0: t,
            ..Default::default()
        }
    }
}

/// Takeoff winding profile evaluated at `t` seconds after takeoff start with
/// `line` metres paid out. Records `t_c` the first time the hold condition
/// fails after the ramp.
pub fn takeoff_duty(t: f64, line: f64, cfg: &ControllerConfig, state: &ControllerState) -> (f64, ControllerState) {
    let mut next = *state;
    let d_max = cfg.d_max;
    if t <= cfg.t_u {
        return (d_max * t.max(0.0) / cfg.t_u, next);
    }
    if next.t_c.is_none() {
        if cfg.l_start - cfg.pull_in < line {
            return (d_max, next);
        }
        next.t_c = Some(t);
    }
    let t_c = next.t_c.expect("set above");
    let since = t - t_c;
    if since < cfg.t_d {
        (d_max - d_max * since / cfg.t_d, next)
    } else {
        (0.0, next)
    }
}

/// Whether the takeoff profile has run to completion at `t`.
pub fn takeoff_finished(t: f64, cfg: &ControllerConfig, state: &ControllerState) -> bool {
    state.t_c.is_some_and(|t_c| t - t_c >= cfg.t_d)
}

/// 1-based band index `i` with `W_{i-1} <= w < W_i`. A speed equal to a
/// boundary belongs to the upper band; the top band is open.
pub fn stage_index(w: f64, thresholds: &[f64]) -> usize {
    let n = thresholds.len().saturating_sub(1).max(1);
    // Count finite interior boundaries at or below w.
    let passed = thresholds[1..n].iter().take_while(|&&b| w >= b).count();
    passed + 1
}

/// One wind-hold update, saturated to `[0, d_max]`.
pub fn wind_hold_update(duty_prev: f64, w: f64, cfg: &ControllerConfig) -> f64 {
    let i = stage_index(w, &cfg.thresholds);
    (duty_prev + cfg.deltas[i - 1]).clamp(0.0, cfg.d_max)
}

/// Release law: brake duty until the line reaches `target`. Returns the
/// duty and whether to switch to wind hold.
pub fn release_to_station(line: f64, target: f64, cfg: &ControllerConfig) -> (f64, bool) {
    if line >= target {
        (cfg.release_duty, true)
    } else {
        (cfg.release_duty, false)
    }
}

/// Operator request, applied only at a tick boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorCommand {
    pub mode: ControllerMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duty: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommandError {
    #[error("duty {0} outside [0, {1}]")]
    DutyOutOfRange(f64, f64),
    #[error("transition {0} -> {1} not allowed")]
    Transition(ControllerMode, ControllerMode),
    #[error("duty only applies in MANUAL")]
    DutyOutsideManual,
}

/// Validate and apply an operator command at time `t`.
pub fn apply_command(
    state: &ControllerState,
    cmd: &OperatorCommand,
    cfg: &ControllerConfig,
    t: f64,
) -> Result<ControllerState, CommandError> {
    use ControllerMode::*;
    if let Some(d) = cmd.duty {
        if !(d.is_finite() && (0.0..=cfg.d_max).contains(&d)) {
            return Err(CommandError::DutyOutOfRange(d, cfg.d_max));
        }
        if cmd.mode != Manual {
            return Err(CommandError::DutyOutsideManual);
        }
    }
    let allowed = cmd.mode == state.mode
        || cmd.mode == Manual
        || state.mode == Manual
        || (state.mode == Idle && cmd.mode == Takeoff);
    if !allowed {
        return Err(CommandError::Transition(state.mode, cmd.mode));
    }
    let mut next = *state;
    if cmd.mode != state.mode {
        next.mode = cmd.mode;
        next.stage_index = 0;
        if cmd.mode == Takeoff {
            next.takeoff_t0 = t;
            next.t_c = None;
        }
        if cmd.mode == Manual && cmd.duty.is_none() {
            next.manual_duty = state.duty;
        }
    }
    if let Some(d) = cmd.duty {
        next.manual_duty = d;
    }
    Ok(next)
}

/// Line and sensor inputs available to one control tick.
#[derive(Debug, Clone, Copy)]
pub struct TickInput<'a> {
    pub t: f64,
    pub line_out: f64,
    pub reading: Option<&'a SensorReading>,
}

/// Run one control period: pick the law for the current mode and return the
/// duty command with the updated state.
pub fn controller_tick(state: &ControllerState, input: TickInput<'_>, cfg: &ControllerConfig) -> (f64, ControllerState) {
    use ControllerMode::*;
    let mut next = *state;
    let t = input.t;
    let fresh = input
        .reading
        .filter(|r| t - r.t <= 2.0 * cfg.period + 1e-9);
    next.telemetry_lost = fresh.is_none();

    let duty = match state.mode {
        Idle => 0.0,
        Manual => state.manual_duty.clamp(0.0, cfg.d_max),
        Takeoff => {
            let since = t - state.takeoff_t0;
            let (duty, s) = takeoff_duty(since, input.line_out, cfg, &next);
            next = s;
            if takeoff_finished(since, cfg, &next) {
                next.mode = ReleaseToStation;
            }
            duty
        }
        ReleaseToStation => {
            let (duty, arrived) = release_to_station(input.line_out, cfg.station_line, cfg);
            if arrived {
                next.mode = WindHold;
                next.stage_index = 0;
            }
            duty
        }
        WindHold => match fresh {
            Some(r) => {
                let w = r.wind_speed();
                next.stage_index = stage_index(w, &cfg.thresholds);
                wind_hold_update(state.duty, w, cfg)
            }
            None => state.duty,
        },
    };
    next.duty = duty.clamp(0.0, cfg.d_max);
    (next.duty, next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> ControllerConfig {
        ControllerConfig::default()
    }

    fn reading(t: f64, w: f64) -> SensorReading {
        SensorReading {
            t,
            wind_x: w,
            ..Default::default()
        }
    }

    #[test]
    fn ramp_start_and_midpoint() {
        let c = cfg();
        let s = ControllerState::in_mode(ControllerMode::Takeoff, 0.0);
        assert_eq!(takeoff_duty(0.0, 100.0, &c, &s).0, 0.0);
        assert_eq!(takeoff_duty(c.t_u / 2.0, 100.0, &c, &s).0, 50.0);
    }

    #[test]
    fn ramp_and_hold_meet_at_t_u() {
        let c = cfg();
        let s = ControllerState::in_mode(ControllerMode::Takeoff, 0.0);
        let at = takeoff_duty(c.t_u, 100.0, &c, &s).0;
        let after = takeoff_duty(c.t_u + 1e-9, 100.0, &c, &s).0;
        assert_eq!(at, c.d_max);
        assert_eq!(after, c.d_max);
    }

    #[test]
    fn decay_starts_when_line_reaches_target() {
        let c = cfg();
        let s = ControllerState::in_mode(ControllerMode::Takeoff, 0.0);
        let (d, s) = takeoff_duty(10.0, 50.5, &c, &s);
        assert_eq!((d, s.t_c), (100.0, None));
        let (d, s) = takeoff_duty(20.0, 50.0, &c, &s);
        assert_eq!((d, s.t_c), (100.0, Some(20.0)));
        let (d, _) = takeoff_duty(21.5, 49.0, &c, &s);
        assert_eq!(d, 50.0);
        // Line paying back out does not restart the hold.
        let (d, _) = takeoff_duty(22.0, 60.0, &c, &s);
        assert!((d - 100.0 / 3.0).abs() < 1e-12);
        assert_eq!(takeoff_duty(23.0, 49.0, &c, &s).0, 0.0);
        assert_eq!(takeoff_duty(99.0, 49.0, &c, &s).0, 0.0);
    }

    #[test]
    fn stage_boundaries() {
        let w = cfg().thresholds;
        assert_eq!(stage_index(0.0, &w), 1);
        assert_eq!(stage_index(1.49, &w), 1);
        assert_eq!(stage_index(1.5, &w), 2);
        assert_eq!(stage_index(2.5, &w), 4);
        assert_eq!(stage_index(5.99, &w), 6);
        assert_eq!(stage_index(6.0, &w), 7);
        assert_eq!(stage_index(40.0, &w), 7);
        assert_eq!(stage_index(f64::INFINITY, &w), 7);
    }

    #[test]
    fn wind_hold_cases() {
        let c = cfg();
        assert_eq!(wind_hold_update(50.0, 2.7, &c), 50.0);
        assert_eq!(wind_hold_update(50.0, 1.0, &c), 58.0);
        assert_eq!(wind_hold_update(98.0, 1.0, &c), 100.0);
        assert_eq!(wind_hold_update(3.0, 7.0, &c), 0.0);
    }

    #[test]
    fn release_cases() {
        let c = cfg();
        assert_eq!(release_to_station(50.0, 100.0, &c), (c.release_duty, false));
        assert!(release_to_station(100.0, 100.0, &c).1);
        assert!(release_to_station(120.0, 100.0, &c).1);
    }

    #[test]
    fn idle_commands_zero() {
        let c = cfg();
        let s = ControllerState::default();
        let r = reading(0.0, 1.0);
        for k in 0..10 {
            let t = k as f64 * 0.2;
            let (d, _) = controller_tick(&s, TickInput { t, line_out: 100.0, reading: Some(&r) }, &c);
            assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn takeoff_tick_follows_profile() {
        let c = cfg();
        let s = ControllerState::in_mode(ControllerMode::Takeoff, 10.0);
        let r = reading(10.0, 0.0);
        let (d, _) = controller_tick(&s, TickInput { t: 10.0, line_out: 100.0, reading: Some(&r) }, &c);
        assert_eq!(d, 0.0);
        let (d, _) = controller_tick(&s, TickInput { t: 11.5, line_out: 100.0, reading: None }, &c);
        assert_eq!(d, 50.0);
    }

    #[test]
    fn takeoff_hands_over_to_release_then_hold() {
        let c = cfg();
        let mut s = ControllerState::in_mode(ControllerMode::Takeoff, 0.0);
        let mut modes = vec![s.mode];
        let mut line = 100.0;
        for k in 0..400 {
            let t = k as f64 * 0.2;
            if t > 20.0 {
                line = (line + 1.0f64).min(110.0);
            } else {
                line = 100.0 - 2.5 * t;
            }
            let r = reading(t, 3.0);
            let (_, n) = controller_tick(&s, TickInput { t, line_out: line, reading: Some(&r) }, &c);
            if n.mode != *modes.last().unwrap() {
                modes.push(n.mode);
            }
            s = n;
        }
        use ControllerMode::*;
        assert_eq!(modes, vec![Takeoff, ReleaseToStation, WindHold]);
    }

    #[test]
    fn stale_telemetry_freezes_wind_hold() {
        let c = cfg();
        let mut s = ControllerState {
            duty: 40.0,
            ..ControllerState::in_mode(ControllerMode::WindHold, 0.0)
        };
        let last = reading(1.0, 1.0);
        let (d, n) = controller_tick(&s, TickInput { t: 1.2, line_out: 100.0, reading: Some(&last) }, &c);
        assert_eq!((d, n.telemetry_lost), (48.0, false));
        s = n;
        // Three ticks with no new frame.
        let mut flags = Vec::new();
        for k in 2..=4 {
            let t = 1.2 + 0.2 * k as f64;
            let (d, n) = controller_tick(&s, TickInput { t, line_out: 100.0, reading: Some(&last) }, &c);
            flags.push((d, n.telemetry_lost));
            s = n;
        }
        assert_eq!(flags, vec![(48.0, true), (48.0, true), (48.0, true)]);
    }

    #[test]
    fn manual_passes_operator_duty() {
        let c = cfg();
        let s = ControllerState::in_mode(ControllerMode::WindHold, 0.0);
        let s = apply_command(&s, &OperatorCommand { mode: ControllerMode::Manual, duty: Some(40.0) }, &c, 3.0).unwrap();
        let (d, _) = controller_tick(&s, TickInput { t: 3.0, line_out: 100.0, reading: None }, &c);
        assert_eq!(d, 40.0);
    }

    #[test]
    fn command_validation() {
        use ControllerMode::*;
        let c = cfg();
        let idle = ControllerState::default();
        let over = OperatorCommand { mode: Manual, duty: Some(140.0) };
        assert!(matches!(apply_command(&idle, &over, &c, 0.0), Err(CommandError::DutyOutOfRange(..))));
        let skip = OperatorCommand { mode: WindHold, duty: None };
        assert!(matches!(apply_command(&idle, &skip, &c, 0.0), Err(CommandError::Transition(..))));
        let start = apply_command(&idle, &OperatorCommand { mode: Takeoff, duty: None }, &c, 5.0).unwrap();
        assert_eq!((start.mode, start.takeoff_t0), (Takeoff, 5.0));
        let jump = OperatorCommand { mode: WindHold, duty: None };
        assert!(apply_command(&start, &jump, &c, 6.0).is_err());
        let manual = apply_command(&start, &OperatorCommand { mode: Manual, duty: None }, &c, 6.0).unwrap();
        let back = apply_command(&manual, &jump, &c, 7.0).unwrap();
        assert_eq!(back.mode, WindHold);
    }

    #[test]
    fn mode_strings_round_trip() {
        for m in ControllerMode::ALL {
            assert_eq!(m.as_str().parse::<ControllerMode>().unwrap(), m);
            assert_eq!(ControllerMode::from_code(m.code()), Some(m));
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.as_str()));
        }
        assert_eq!(ControllerMode::from_code(9), None);
    }

    proptest! {
        #[test]
        fn duty_stays_in_range(ws in proptest::collection::vec(0.0f64..12.0, 1..200), start in 0.0f64..100.0) {
            let c = cfg();
            let mut duty = start;
            for w in ws {
                duty = wind_hold_update(duty, w, &c);
                prop_assert!((0.0..=c.d_max).contains(&duty));
            }
        }

        #[test]
        fn update_non_increasing_in_wind(duty in 0.0f64..100.0, a in 0.0f64..10.0, b in 0.0f64..10.0) {
            let c = cfg();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(wind_hold_update(duty, hi, &c) <= wind_hold_update(duty, lo, &c));
        }
    }
}
