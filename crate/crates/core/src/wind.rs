//! Deterministic horizontal wind field: power-law shear, scripted temporal
//! events and seeded smooth noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Violation;

/// Altitude below which the shear profile is held constant, m.
pub const Z_FLOOR: f64 = 0.5;

/// A multiplicative window on the wind speed, active on `[t_start_s, t_end_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindEvent {
    pub t_start_s: f64,
    pub t_end_s: f64,
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindScenario {
    /// Shear exponent.
    pub alpha: f64,
    /// Speed at the reference height, m/s.
    pub v_ref_mps: f64,
    /// Reference height, m.
    pub z_ref_m: f64,
    pub events: Vec<WindEvent>,
    pub noise_seed: u64,
    /// Peak amplitude of the smooth noise, m/s.
    pub noise_amplitude_mps: f64,
}

impl Default for WindScenario {
    fn default() -> Self {
        Self {
            alpha: 0.14,
            v_ref_mps: 4.0,
            z_ref_m: 10.0,
            events: Vec::new(),
            noise_seed: 0,
            noise_amplitude_mps: 0.0,
        }
    }
}

impl WindScenario {
    pub fn steady(v_ref_mps: f64) -> Self {
        Self {
            v_ref_mps,
            ..Default::default()
        }
    }

    /// Uniform wind at every altitude.
    pub fn uniform(speed: f64) -> Self {
        Self {
            alpha: 0.0,
            v_ref_mps: speed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |field: &str, msg: &str| {
            out.push(Violation {
                field: format!("wind.{field}"),
                message: msg.to_string(),
            })
        };
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            push("alpha", "alpha must be non-negative");
        }
        if !(self.v_ref_mps.is_finite() && self.v_ref_mps >= 0.0) {
            push("v_ref_mps", "v_ref must be non-negative");
        }
        if !(self.z_ref_m.is_finite() && self.z_ref_m > 0.0) {
            push("z_ref_m", "z_ref must be positive");
        }
        if !(self.noise_amplitude_mps.is_finite() && self.noise_amplitude_mps >= 0.0) {
            push("noise_amplitude_mps", "noise amplitude must be non-negative");
        }
        for e in &self.events {
            if !(e.t_start_s.is_finite() && e.t_end_s.is_finite() && e.t_start_s < e.t_end_s) {
                push("events", "event window must have t_start < t_end");
            }
            if !(e.multiplier.is_finite() && e.multiplier >= 0.0) {
                push("events", "event multiplier must be non-negative");
            }
        }
        if self
            .events
            .windows(2)
            .any(|p| p[1].t_start_s < p[0].t_end_s)
        {
            push("events", "events overlap or are out of order");
        }
        out
    }

    /// Multiplier of the event active at `t`, or 1.
    pub fn event_multiplier(&self, t: f64) -> f64 {
        self.events
            .iter()
            .find(|e| e.t_start_s <= t && t < e.t_end_s)
            .map_or(1.0, |e| e.multiplier)
    }

    /// Shear profile without events or noise.
    pub fn profile(&self, z: f64) -> f64 {
        let z = z.max(Z_FLOOR);
        self.v_ref_mps * (z / self.z_ref_m).powf(self.alpha)
    }

    /// Smooth noise: linear interpolation between per-second offsets drawn
    /// uniformly from `[-amplitude, amplitude]`.
    pub fn noise(&self, t: f64) -> f64 {
        if self.noise_amplitude_mps == 0.0 {
            return 0.0;
        }
        let t = t.max(0.0);
        let k = t.floor();
        let frac = t - k;
        let a = self.noise_knot(k as u64);
        let b = self.noise_knot(k as u64 + 1);
        a + (b - a) * frac
    }

    fn noise_knot(&self, second: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.noise_seed);
        // Two 32-bit words per f64 draw; random access by second.
        rng.set_word_pos(u128::from(second) * 2);
        let u: f64 = rng.random();
        (2.0 * u - 1.0) * self.noise_amplitude_mps
    }

    /// Horizontal wind speed at altitude `z` and time `t`.
    pub fn wind_at(&self, z: f64, t: f64) -> f64 {
        ((self.profile(z) + self.noise(t)) * self.event_multiplier(t)).max(0.0)
    }

    /// Speeds at `steps` evenly spaced altitudes from `z_min` to `z_max`
    /// inclusive, evaluated at t = 0.
    pub fn sweep(&self, z_min: f64, z_max: f64, steps: usize) -> Vec<(f64, f64)> {
        assert!(z_min < z_max && steps >= 2, "sweep needs z_min < z_max and steps >= 2");
        (0..steps)
            .map(|i| {
                let z = if i + 1 == steps {
                    z_max
                } else {
                    z_min + (z_max - z_min) * i as f64 / (steps - 1) as f64
                };
                (z, self.wind_at(z, 0.0))
            })
            .collect()
    }
}

pub fn wind_at(scenario: &WindScenario, z: f64, t: f64) -> f64 {
    scenario.wind_at(z, t)
}

pub fn scenario_sweep(scenario: &WindScenario, z_min: f64, z_max: f64, steps: usize) -> Vec<(f64, f64)> {
    scenario.sweep(z_min, z_max, steps)
}
