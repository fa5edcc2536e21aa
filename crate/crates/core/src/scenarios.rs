//! Named flight scenarios: a wind field plus the state the run starts from.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{Config, Violation};
use crate::controller::ControllerMode;
use crate::error::{Error, Result};
use crate::physics::{KiteState, WinchState};
use crate::wind::{WindEvent, WindScenario};

/// Initial conditions of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StartSpec {
    pub mode: ControllerMode,
    /// Line paid out at t = 0, m.
    pub line_m: f64,
    /// Elevation of the kite on its taut line, degrees; 0 puts it on the ground.
    pub elevation_deg: f64,
    /// Hold the drum fixed for the whole run.
    pub lock_line: bool,
}

impl Default for StartSpec {
    fn default() -> Self {
        Self {
            mode: ControllerMode::Takeoff,
            line_m: 100.0,
            elevation_deg: 0.0,
            lock_line: false,
        }
    }
}

impl StartSpec {
    pub fn kite(&self) -> KiteState {
        if self.elevation_deg == 0.0 {
            return KiteState::on_ground(self.line_m);
        }
        let e = self.elevation_deg.to_radians();
        KiteState {
            x: self.line_m * e.cos(),
            z: self.line_m * e.sin(),
            airborne: true,
            ..KiteState::on_ground(0.0)
        }
    }

    pub fn winch(&self) -> WinchState {
        WinchState::with_line(self.line_m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub wind: WindScenario,
    #[serde(default)]
    pub start: StartSpec,
    /// Duration used when none is given on the command line, s.
    pub duration_s: f64,
}

pub const PRESET_NAMES: [&str; 6] = [
    "takeoff-calm",
    "flight-6min",
    "steady-4mps",
    "gusty",
    "lull",
    "wind-step",
];

/// Time of the lull in `flight-6min` and `lull`, s.
pub const LULL_START_S: f64 = 270.0;
pub const LULL_END_S: f64 = 300.0;
/// End of the initial calm in `flight-6min`, s.
pub const WIND_ONSET_S: f64 = 15.0;
/// Square-wave gusts of the `wind-step` scenario.
pub const STEP_FIRST_S: f64 = 20.0;
pub const STEP_HALF_PERIOD_S: f64 = 10.0;
pub const STEP_COUNT: usize = 6;
pub const STEP_MULTIPLIER: f64 = 1.15;

fn lull_events() -> Vec<WindEvent> {
    vec![WindEvent {
        t_start_s: LULL_START_S,
        t_end_s: LULL_END_S,
        multiplier: 0.35,
    }]
}

fn step_events() -> Vec<WindEvent> {
    (0..STEP_COUNT)
        .map(|i| {
            let t0 = STEP_FIRST_S + 2.0 * STEP_HALF_PERIOD_S * i as f64;
            WindEvent {
                t_start_s: t0,
                t_end_s: t0 + STEP_HALF_PERIOD_S,
                multiplier: STEP_MULTIPLIER,
            }
        })
        .collect()
}

/// Calm until the wind arrives, then the lull.
fn calm_then_lull() -> Vec<WindEvent> {
    let mut events = vec![WindEvent {
        t_start_s: 0.0,
        t_end_s: WIND_ONSET_S,
        multiplier: 0.0,
    }];
    events.extend(lull_events());
    events
}

impl Scenario {
    /// Built-in scenario by name.
    pub fn preset(name: &str) -> Option<Scenario> {
        let wind_hold = StartSpec {
            mode: ControllerMode::WindHold,
            ..Default::default()
        };
        let s = match name {
            // Towing in a near calm: only a faint breeze aloft.
            "takeoff-calm" => Scenario {
                name: name.into(),
                wind: WindScenario::steady(0.15),
                start: StartSpec::default(),
                duration_s: 40.0,
            },
            "flight-6min" => Scenario {
                name: name.into(),
                wind: WindScenario {
                    v_ref_mps: 2.8,
                    events: calm_then_lull(),
                    noise_seed: 6,
                    noise_amplitude_mps: 0.3,
                    ..Default::default()
                },
                start: wind_hold,
                duration_s: 360.0,
            },
            "steady-4mps" => Scenario {
                name: name.into(),
                wind: WindScenario::steady(4.0),
                start: wind_hold,
                duration_s: 300.0,
            },
            "gusty" => Scenario {
                name: name.into(),
                wind: WindScenario {
                    v_ref_mps: 3.0,
                    noise_seed: 11,
                    noise_amplitude_mps: 1.0,
                    ..Default::default()
                },
                start: wind_hold,
                duration_s: 300.0,
            },
            "lull" => Scenario {
                name: name.into(),
                wind: WindScenario {
                    v_ref_mps: 2.8,
                    events: lull_events(),
                    noise_seed: 27,
                    noise_amplitude_mps: 0.3,
                    ..Default::default()
                },
                start: wind_hold,
                duration_s: 360.0,
            },
            // Fixed line, kite flying, wind stepping up and down.
            "wind-step" => Scenario {
                name: name.into(),
                wind: WindScenario {
                    alpha: 0.0,
                    v_ref_mps: 2.8,
                    events: step_events(),
                    ..Default::default()
                },
                start: StartSpec {
                    mode: ControllerMode::Idle,
                    line_m: 100.0,
                    elevation_deg: 19.5,
                    lock_line: true,
                },
                duration_s: STEP_FIRST_S + 2.0 * STEP_HALF_PERIOD_S * STEP_COUNT as f64 + 20.0,
            },
            _ => return None,
        };
        Some(s)
    }

    /// The wind block of a config, started with the default takeoff.
    pub fn from_config(cfg: &Config) -> Scenario {
        Scenario {
            name: "config".into(),
            wind: cfg.wind.clone(),
            start: StartSpec {
                line_m: cfg.controller.l_start,
                ..Default::default()
            },
            duration_s: 120.0,
        }
    }

    pub fn validate(&self, cfg: &Config) -> Vec<Violation> {
        let mut out = self.wind.validate();
        let mut push = |field: &str, msg: &str| {
            out.push(Violation {
                field: field.into(),
                message: msg.into(),
            })
        };
        let s = &self.start;
        if !(s.line_m.is_finite() && s.line_m > 0.0 && s.line_m <= cfg.winch.capacity_m) {
            push("start.line_m", "start line must be positive and within drum capacity");
        }
        if !(s.elevation_deg.is_finite() && (0.0..90.0).contains(&s.elevation_deg)) {
            push("start.elevation_deg", "start elevation must be in [0, 90)");
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            push("duration_s", "duration must be positive");
        }
        out
    }

    pub fn from_json_str(text: &str) -> Result<Scenario> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        // A bare wind block is accepted too.
        if value.get("wind").is_some() {
            serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))
        } else {
            let wind: WindScenario = serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
            Ok(Scenario {
                name: "file".into(),
                wind,
                start: StartSpec::default(),
                duration_s: 120.0,
            })
        }
    }
}

/// Resolve a preset name or a path to a scenario file.
pub fn load_scenario(name_or_path: &str) -> Result<Scenario> {
    if let Some(s) = Scenario::preset(name_or_path) {
        return Ok(s);
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(Error::UnknownScenario(name_or_path.into()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut s = Scenario::from_json_str(&text)?;
    if s.name == "file" {
        s.name = path
            .file_stem()
            .map_or_else(|| "file".into(), |n| n.to_string_lossy().into_owned());
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_valid() {
        let cfg = Config::default();
        for name in PRESET_NAMES {
            let s = Scenario::preset(name).unwrap();
            assert!(s.validate(&cfg).is_empty(), "{name}: {:?}", s.validate(&cfg));
            assert_eq!(s.name, name);
        }
        assert!(Scenario::preset("nope").is_none());
    }

    #[test]
    fn json_round_trip_and_bare_wind() {
        let s = Scenario::preset("flight-6min").unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(Scenario::from_json_str(&text).unwrap(), s);
        let bare = Scenario::from_json_str(r#"{"v_ref_mps": 3.0}"#).unwrap();
        assert_eq!(bare.wind.v_ref_mps, 3.0);
        assert_eq!(bare.start, StartSpec::default());
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(load_scenario("no-such-scenario"), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn start_on_taut_line() {
        let s = StartSpec {
            elevation_deg: 30.0,
            ..Default::default()
        };
        let k = s.kite();
        assert!((k.distance() - 100.0).abs() < 1e-12);
        assert!((k.z - 50.0).abs() < 1e-12);
    }
}
