//! Configuration: physical constants, winch parameters, controller tables and
//! the wind scenario, loaded from a single JSON document.
//!
//! All quantities are SI (m, s, kg, N, Pa) except duty ratios, which are
//! percent in `0..=100`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::wind::WindScenario;

/// Standard gravity used throughout, m/s².
pub const STANDARD_GRAVITY: f64 = 9.81;

/// A single broken invariant. Violations are data, not failures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalConstants {
    pub kite_mass_kg: f64,
    pub unit_mass_kg: f64,
    pub wing_area_m2: f64,
    pub lift_coeff: f64,
    pub drag_coeff: f64,
    pub air_density_kg_m3: f64,
    pub gravity_mps2: f64,
    pub line_mass_kg_per_m: f64,
}

impl PhysicalConstants {
    /// Airborne mass excluding the tether.
    pub fn flight_mass(&self) -> f64 {
        self.kite_mass_kg + self.unit_mass_kg
    }

    /// Flight mass plus the mass of `line_out` metres of tether.
    pub fn total_mass(&self, line_out: f64) -> f64 {
        self.flight_mass() + self.line_mass_kg_per_m * line_out.max(0.0)
    }

    /// Constants with `lift_coeff` left at zero, for calibration.
    fn uncalibrated() -> Self {
        Self {
            kite_mass_kg: 0.70,
            unit_mass_kg: 0.85,
            wing_area_m2: 3.2 * 1.5,
            lift_coeff: 0.0,
            drag_coeff: 0.0,
            air_density_kg_m3: 1.225,
            gravity_mps2: STANDARD_GRAVITY,
            line_mass_kg_per_m: 0.0371 / 100.0,
        }
    }
}

impl Default for PhysicalConstants {
    /// Flight-unit constants with the lift coefficient calibrated to the
    /// 2.5 m/s sustain wind and drag at half of lift.
    fn default() -> Self {
        let base = Self::uncalibrated();
        let lift_coeff = crate::physics::calibrate_lift_coeff(&base, DEFAULT_SUSTAIN_WIND);
        Self {
            lift_coeff,
            drag_coeff: lift_coeff / DEFAULT_LIFT_TO_DRAG,
            ..base
        }
    }
}

/// Sustain wind speed for the loaded flight unit, m/s.
pub const DEFAULT_SUSTAIN_WIND: f64 = 2.5;

/// Lift-to-drag ratio of the loaded kite.
pub const DEFAULT_LIFT_TO_DRAG: f64 = 2.0;

/// Parameters of the simulated plant that are not physical constants of the
/// kite itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    /// Physics integration step, s.
    pub dt_s: f64,
    /// Relative tether stretch at maximum winch pull.
    pub tether_stretch_at_max: f64,
    /// Tether damping ratio.
    pub tether_damping_ratio: f64,
    /// Line length below which stiffness stops growing, m.
    pub tether_stiffness_floor_m: f64,
    /// Kinetic friction coefficient between kite and ground.
    pub ground_friction: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            dt_s: 0.01,
            tether_stretch_at_max: 5e-4,
            tether_damping_ratio: 0.3,
            tether_stiffness_floor_m: 40.0,
            ground_friction: 0.4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WinchParams {
    /// Maximum winding-up pull, kgf.
    pub max_pull_kgf: f64,
    /// Maximum take-up (wind-in) speed, m/s.
    pub max_takeup_mps: f64,
    /// Maximum payout speed under tension, m/s.
    pub max_payout_mps: f64,
    /// Wind-in speed per newton of surplus pull, (m/s)/N.
    pub k_motor: f64,
    /// Payout speed per newton of tension over the holding force, (m/s)/N.
    pub k_clutch: f64,
    /// Residual clutch holding force at zero duty, N.
    pub brake_hold_n: f64,
    /// Spool capacity, m.
    pub capacity_m: f64,
}

impl WinchParams {
    pub fn max_pull_n(&self, gravity: f64) -> f64 {
        self.max_pull_kgf * gravity
    }
}

impl Default for WinchParams {
    fn default() -> Self {
        Self {
            max_pull_kgf: 64.0,
            max_takeup_mps: 2.5,
            max_payout_mps: 5.0,
            k_motor: 0.02,
            k_clutch: 0.1,
            brake_hold_n: 5.0,
            capacity_m: 300.0,
        }
    }
}

/// Takeoff profile and staged wind-hold table.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    /// Peak takeoff duty, percent.
    pub d_max: f64,
    /// Ramp-up duration, s.
    pub t_u: f64,
    /// Ramp-down duration, s.
    pub t_d: f64,
    /// Line length at takeoff start, m.
    pub l_start: f64,
    /// Length to wind in before the ramp-down starts, m.
    pub pull_in: f64,
    /// Duty held while paying out to the station length, percent.
    pub release_duty: f64,
    /// Line length at which wind-hold control begins, m.
    pub station_line: f64,
    /// Stage boundaries W_0..W_n in m/s. W_0 = 0; whatever value W_n holds,
    /// the top band is open.
    pub thresholds: Vec<f64>,
    /// Per-tick duty increments, one per stage, percent.
    pub deltas: Vec<f64>,
    /// Control period, s.
    pub period: f64,
}

impl ControllerConfig {
    pub fn n_stages(&self) -> usize {
        self.deltas.len()
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let finite = |v: f64| v.is_finite();
        if !(finite(self.d_max) && self.d_max > 0.0 && self.d_max <= 100.0) {
            out.push(Violation::new("takeoff.d_max", "d_max out of range"));
        }
        if !(finite(self.t_u) && self.t_u > 0.0) {
            out.push(Violation::new("takeoff.t_u_s", "t_u must be positive"));
        }
        if !(finite(self.t_d) && self.t_d > 0.0) {
            out.push(Violation::new("takeoff.t_d_s", "t_d must be positive"));
        }
        if !(finite(self.l_start) && self.l_start > 0.0) {
            out.push(Violation::new("takeoff.l_start_m", "l_start must be positive"));
        }
        if !(finite(self.pull_in) && self.pull_in > 0.0) {
            out.push(Violation::new("takeoff.pull_in_m", "pull_in must be positive"));
        } else if self.pull_in > self.l_start {
            out.push(Violation::new("takeoff.pull_in_m", "pull_in exceeds l_start"));
        }
        if !(finite(self.release_duty) && self.release_duty >= 0.0 && self.release_duty <= self.d_max)
        {
            out.push(Violation::new(
                "takeoff.release_duty_pct",
                "release_duty out of range",
            ));
        }
        if !(finite(self.station_line) && self.station_line > 0.0) {
            out.push(Violation::new(
                "takeoff.station_line_m",
                "station_line must be positive",
            ));
        }
        if !(finite(self.period) && self.period > 0.0) {
            out.push(Violation::new("windhold.period_s", "period must be positive"));
        }

        let w = &self.thresholds;
        if w.len() < 2 {
            out.push(Violation::new(
                "windhold.thresholds_mps",
                "at least two thresholds required",
            ));
        } else {
            if w[0] != 0.0 {
                out.push(Violation::new(
                    "windhold.thresholds_mps",
                    "thresholds must start at 0",
                ));
            }
            if w.iter().any(|v| v.is_nan()) || w[..w.len() - 1].iter().any(|v| !v.is_finite()) {
                out.push(Violation::new(
                    "windhold.thresholds_mps",
                    "interior thresholds must be finite",
                ));
            } else if w.windows(2).any(|p| p[1] <= p[0]) {
                out.push(Violation::new(
                    "windhold.thresholds_mps",
                    "thresholds not increasing",
                ));
            }
        }
        if self.deltas.is_empty() || self.deltas.len() + 1 != w.len() {
            out.push(Violation::new(
                "windhold.deltas_pct",
                "deltas length must be one less than thresholds length",
            ));
        }
        if self.deltas.iter().any(|d| !d.is_finite()) {
            out.push(Violation::new("windhold.deltas_pct", "deltas must be finite"));
        } else if self.deltas.windows(2).any(|p| p[1] > p[0]) {
            out.push(Violation::new(
                "windhold.deltas_pct",
                "deltas not non-increasing",
            ));
        }
        out
    }
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            d_max: 100.0,
            t_u: 3.0,
            t_d: 3.0,
            l_start: 100.0,
            pull_in: 50.0,
            release_duty: 0.0,
            station_line: 100.0,
            thresholds: vec![0.0, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0, f64::INFINITY],
            deltas: vec![8.0, 5.0, 2.0, 0.0, -2.0, -5.0, -8.0],
            period: 0.2,
        }
    }
}

/// Complete validated configuration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub physics: PhysicalConstants,
    pub plant: PlantParams,
    pub winch: WinchParams,
    pub controller: ControllerConfig,
    pub wind: WindScenario,
}

impl Config {
    /// Every invariant violation across all sections; empty iff valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let p = &self.physics;
        let positives = [
            ("physics.kite_mass_kg", p.kite_mass_kg),
            ("physics.unit_mass_kg", p.unit_mass_kg),
            ("physics.wing_area_m2", p.wing_area_m2),
            ("physics.lift_coeff", p.lift_coeff),
            ("physics.drag_coeff", p.drag_coeff),
            ("physics.air_density_kg_m3", p.air_density_kg_m3),
            ("physics.gravity_mps2", p.gravity_mps2),
            ("physics.line_mass_kg_per_m", p.line_mass_kg_per_m),
            ("physics.dt_s", self.plant.dt_s),
            ("physics.tether_stretch_at_max", self.plant.tether_stretch_at_max),
            ("physics.tether_stiffness_floor_m", self.plant.tether_stiffness_floor_m),
            ("winch.max_pull_kgf", self.winch.max_pull_kgf),
            ("winch.max_takeup_mps", self.winch.max_takeup_mps),
            ("winch.max_payout_mps", self.winch.max_payout_mps),
            ("winch.k_motor", self.winch.k_motor),
            ("winch.k_clutch", self.winch.k_clutch),
            ("winch.capacity_m", self.winch.capacity_m),
        ];
        for (field, v) in positives {
            if !(v.is_finite() && v > 0.0) {
                let name = field.rsplit('.').next().unwrap_or(field);
                out.push(Violation::new(field, format!("{name} must be positive")));
            }
        }
        let zeta = self.plant.tether_damping_ratio;
        if !(zeta.is_finite() && zeta >= 0.0) {
            out.push(Violation::new(
                "physics.tether_damping_ratio",
                "tether_damping_ratio must be non-negative",
            ));
        }
        let mu = self.plant.ground_friction;
        if !(mu.is_finite() && mu >= 0.0) {
            out.push(Violation::new(
                "physics.ground_friction",
                "ground_friction must be non-negative",
            ));
        }
        let hold = self.winch.brake_hold_n;
        if !(hold.is_finite() && hold >= 0.0) {
            out.push(Violation::new(
                "winch.brake_hold_n",
                "brake_hold_n must be non-negative",
            ));
        }
        let c = &self.controller;
        out.extend(c.validate());
        if c.l_start.is_finite() && c.l_start > self.winch.capacity_m {
            out.push(Violation::new("takeoff.l_start_m", "l_start exceeds spool capacity"));
        }
        if c.period.is_finite() && self.plant.dt_s.is_finite() && self.plant.dt_s > 0.0 {
            let ratio = c.period / self.plant.dt_s;
            if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
                out.push(Violation::new(
                    "windhold.period_s",
                    "period must be a whole multiple of dt_s",
                ));
            }
        }
        out.extend(self.wind.validate());
        out
    }

    pub fn into_validated(self) -> Result<Self> {
        let v = self.validate();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::Validation(v))
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ConfigFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Config::from(file).into_validated()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&ConfigFile::from(self.clone()))
            .expect("config serializes")
    }
}

/// Load and validate a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<Config> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Config::from_json_str(&text)
}

/// Same as [`Config::validate`], as a free function.
pub fn validate_config(cfg: &Config) -> Vec<Violation> {
    cfg.validate()
}

// On-disk schema.

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    physics: PhysicsSection,
    #[serde(default)]
    winch: WinchParams,
    #[serde(default)]
    takeoff: TakeoffSection,
    #[serde(default)]
    windhold: WindholdSection,
    #[serde(default)]
    wind: WindScenario,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PhysicsSection {
    kite_mass_kg: f64,
    unit_mass_kg: f64,
    wing_area_m2: f64,
    lift_coeff: f64,
    drag_coeff: f64,
    air_density_kg_m3: f64,
    gravity_mps2: f64,
    line_mass_kg_per_m: f64,
    dt_s: f64,
    tether_stretch_at_max: f64,
    tether_damping_ratio: f64,
    tether_stiffness_floor_m: f64,
    ground_friction: f64,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        (PhysicalConstants::default(), PlantParams::default()).into()
    }
}

impl From<(PhysicalConstants, PlantParams)> for PhysicsSection {
    fn from((c, p): (PhysicalConstants, PlantParams)) -> Self {
        Self {
            kite_mass_kg: c.kite_mass_kg,
            unit_mass_kg: c.unit_mass_kg,
            wing_area_m2: c.wing_area_m2,
            lift_coeff: c.lift_coeff,
            drag_coeff: c.drag_coeff,
            air_density_kg_m3: c.air_density_kg_m3,
            gravity_mps2: c.gravity_mps2,
            line_mass_kg_per_m: c.line_mass_kg_per_m,
            dt_s: p.dt_s,
            tether_stretch_at_max: p.tether_stretch_at_max,
            tether_damping_ratio: p.tether_damping_ratio,
            tether_stiffness_floor_m: p.tether_stiffness_floor_m,
            ground_friction: p.ground_friction,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TakeoffSection {
    d_max: f64,
    t_u_s: f64,
    t_d_s: f64,
    l_start_m: f64,
    pull_in_m: f64,
    release_duty_pct: f64,
    station_line_m: f64,
}

impl Default for TakeoffSection {
    fn default() -> Self {
        let c = ControllerConfig::default();
        Self {
            d_max: c.d_max,
            t_u_s: c.t_u,
            t_d_s: c.t_d,
            l_start_m: c.l_start,
            pull_in_m: c.pull_in,
            release_duty_pct: c.release_duty,
            station_line_m: c.station_line,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct WindholdSection {
    #[serde(
        serialize_with = "ser_thresholds",
        deserialize_with = "de_thresholds"
    )]
    thresholds_mps: Vec<f64>,
    deltas_pct: Vec<f64>,
    period_s: f64,
}

impl Default for WindholdSection {
    fn default() -> Self {
        let c = ControllerConfig::default();
        Self {
            thresholds_mps: c.thresholds,
            deltas_pct: c.deltas,
            period_s: c.period,
        }
    }
}

/// The open upper band is written as `null`.
fn ser_thresholds<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let opt: Vec<Option<f64>> = v
        .iter()
        .map(|&x| if x.is_infinite() && x > 0.0 { None } else { Some(x) })
        .collect();
    opt.serialize(s)
}

fn de_thresholds<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    let raw: Vec<Option<f64>> = Vec::deserialize(d)?;
    let n = raw.len();
    raw.into_iter()
        .enumerate()
        .map(|(i, v)| match v {
            Some(x) => Ok(x),
            None if i + 1 == n => Ok(f64::INFINITY),
            None => Err(serde::de::Error::custom(
                "only the last threshold may be null (+inf)",
            )),
        })
        .collect()
}

impl From<ConfigFile> for Config {
    fn from(f: ConfigFile) -> Self {
        let p = f.physics;
        let thresholds = f.windhold.thresholds_mps;
        Config {
            physics: PhysicalConstants {
                kite_mass_kg: p.kite_mass_kg,
                unit_mass_kg: p.unit_mass_kg,
                wing_area_m2: p.wing_area_m2,
                lift_coeff: p.lift_coeff,
                drag_coeff: p.drag_coeff,
                air_density_kg_m3: p.air_density_kg_m3,
                gravity_mps2: p.gravity_mps2,
                line_mass_kg_per_m: p.line_mass_kg_per_m,
            },
            plant: PlantParams {
                dt_s: p.dt_s,
                tether_stretch_at_max: p.tether_stretch_at_max,
                tether_damping_ratio: p.tether_damping_ratio,
                tether_stiffness_floor_m: p.tether_stiffness_floor_m,
                ground_friction: p.ground_friction,
            },
            winch: f.winch,
            controller: ControllerConfig {
                d_max: f.takeoff.d_max,
                t_u: f.takeoff.t_u_s,
                t_d: f.takeoff.t_d_s,
                l_start: f.takeoff.l_start_m,
                pull_in: f.takeoff.pull_in_m,
                release_duty: f.takeoff.release_duty_pct,
                station_line: f.takeoff.station_line_m,
                thresholds,
                deltas: f.windhold.deltas_pct,
                period: f.windhold.period_s,
            },
            wind: f.wind,
        }
    }
}

impl From<Config> for ConfigFile {
    fn from(c: Config) -> Self {
        let k = c.controller;
        ConfigFile {
            physics: (c.physics, c.plant).into(),
            winch: c.winch,
            takeoff: TakeoffSection {
                d_max: k.d_max,
                t_u_s: k.t_u,
                t_d_s: k.t_d,
                l_start_m: k.l_start,
                pull_in_m: k.pull_in,
                release_duty_pct: k.release_duty,
                station_line_m: k.station_line,
            },
            windhold: WindholdSection {
                thresholds_mps: k.thresholds,
                deltas_pct: k.deltas,
                period_s: k.period,
            },
            wind: c.wind,
        }
    }
}

// Serde plumbing used by manifests and the live API.
impl Serialize for Config {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ConfigFile::from(self.clone()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Config {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        ConfigFile::deserialize(d).map(Config::from)
    }
}

/// Threshold-table update accepted by the live service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindholdTable {
    #[serde(
        serialize_with = "ser_thresholds",
        deserialize_with = "de_thresholds"
    )]
    pub thresholds_mps: Vec<f64>,
    pub deltas_pct: Vec<f64>,
    #[serde(default)]
    pub period_s: Option<f64>,
}

impl WindholdTable {
    /// Apply to a copy of `base`, returning the new controller config or the
    /// violations it would introduce.
    pub fn apply(&self, base: &ControllerConfig) -> std::result::Result<ControllerConfig, Vec<Violation>> {
        let next = ControllerConfig {
            thresholds: self.thresholds_mps.clone(),
            deltas: self.deltas_pct.clone(),
            period: self.period_s.unwrap_or(base.period),
            ..base.clone()
        };
        let v = next.validate();
        if !v.is_empty() {
            return Err(v);
        }
        if (next.period - base.period).abs() > 0.0 {
            return Err(vec![Violation::new(
                "windhold.period_s",
                "period cannot change during a run",
            )]);
        }
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn messages(v: &[Violation]) -> Vec<String> {
        v.iter().map(|v| v.message.clone()).collect()
    }

    #[test]
    fn default_config_is_valid() {
        let cfg = Config::default();
        assert!(cfg.validate().is_empty(), "{:?}", cfg.validate());
        assert_eq!(cfg.controller.n_stages(), 7);
        assert_eq!(cfg.controller.period, 0.2);
    }

    #[test]
    fn default_masses_and_area() {
        let p = PhysicalConstants::default();
        assert_eq!(p.kite_mass_kg, 0.70);
        assert_eq!(p.unit_mass_kg, 0.85);
        assert!((p.wing_area_m2 - 4.8).abs() < 1e-12);
        assert!((p.line_mass_kg_per_m - 0.000371).abs() < 1e-15);
        assert!((p.drag_coeff - p.lift_coeff / 2.0).abs() < 1e-15);
    }

    #[test]
    fn d_max_out_of_range() {
        let cfg = ControllerConfig {
            d_max: 150.0,
            ..Default::default()
        };
        assert_eq!(messages(&cfg.validate()), vec!["d_max out of range"]);
    }

    #[test]
    fn pull_in_zero() {
        let cfg = ControllerConfig {
            pull_in: 0.0,
            ..Default::default()
        };
        assert_eq!(messages(&cfg.validate()), vec!["pull_in must be positive"]);
    }

    #[test]
    fn thresholds_not_increasing() {
        let text = r#"{"windhold": {"thresholds_mps": [0, 2, 1], "deltas_pct": [1, 0]}}"#;
        let err = Config::from_json_str(text).unwrap_err();
        assert!(err.to_string().contains("thresholds not increasing"), "{err}");
    }

    #[test]
    fn deltas_not_non_increasing() {
        let text = r#"{"windhold": {"thresholds_mps": [0, 1, 2, null], "deltas_pct": [2, 5, -1]}}"#;
        let err = Config::from_json_str(text).unwrap_err();
        assert!(err.to_string().contains("deltas not non-increasing"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = Config::from_json_str(r#"{"physic": {}}"#).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        let err = Config::from_json_str(r#"{"takeoff": {"dmax": 3}}"#).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(
            Config::from_json_str("{ nope").unwrap_err(),
            Error::Parse(_)
        ));
        assert!(matches!(Config::from_json_str("").unwrap_err(), Error::Parse(_)));
    }

    #[test]
    fn null_threshold_only_last() {
        let text = r#"{"windhold": {"thresholds_mps": [0, null, 3], "deltas_pct": [1, 0]}}"#;
        assert!(matches!(Config::from_json_str(text).unwrap_err(), Error::Parse(_)));
    }

    #[test]
    fn json_round_trip() {
        let cfg = Config::default();
        let text = cfg.to_json_string();
        assert!(text.contains("null"));
        assert_eq!(Config::from_json_str(&text).unwrap(), cfg);
    }

    #[test]
    fn period_must_divide_into_steps() {
        let mut cfg = Config::default();
        cfg.controller.period = 0.205;
        assert!(messages(&cfg.validate()).contains(&"period must be a whole multiple of dt_s".to_string()));
    }

    #[test]
    fn table_update_validated() {
        let base = ControllerConfig::default();
        let ok = WindholdTable {
            thresholds_mps: vec![0.0, 2.0, f64::INFINITY],
            deltas_pct: vec![4.0, -4.0],
            period_s: None,
        };
        assert_eq!(ok.apply(&base).unwrap().n_stages(), 2);
        let bad = WindholdTable {
            thresholds_mps: vec![0.0, 2.0, f64::INFINITY],
            deltas_pct: vec![-4.0, 4.0],
            period_s: None,
        };
        assert!(bad.apply(&base).is_err());
    }
}
