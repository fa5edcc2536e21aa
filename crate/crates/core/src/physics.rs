//! Vertical-plane point-mass kite on a winch-controlled tether.
//!
//! Coordinates: `x` is horizontal distance downwind of the winch, `z` is
//! altitude. The winch sits at the origin. Wind blows toward `+x`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::config::{PhysicalConstants, PlantParams, WinchParams};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub z: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, z: 0.0 };

    pub fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.z)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.z * o.z
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.z + o.z)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.z - o.z)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.z * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.z)
    }
}

/// Kite and flight unit, treated as one point mass.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KiteState {
    pub x: f64,
    pub z: f64,
    pub vx: f64,
    pub vz: f64,
    /// Tether tension at the kite, N.
    pub tension: f64,
    pub airborne: bool,
}

impl KiteState {
    /// Resting on the ground at the end of a straight line.
    pub fn on_ground(x: f64) -> Self {
        Self {
            x,
            ..Default::default()
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.z)
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.vx, self.vz)
    }

    pub fn distance(&self) -> f64 {
        self.position().norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WinchState {
    /// Applied duty ratio, percent.
    pub duty: f64,
    /// Paid-out line, m.
    pub line_out: f64,
    /// Positive when winding in, m/s.
    pub line_speed: f64,
    /// Cumulative spool travel in either direction, m.
    pub encoder_m: f64,
}

impl WinchState {
    pub fn with_line(line_out: f64) -> Self {
        Self {
            line_out,
            ..Default::default()
        }
    }
}

/// Air velocity relative to the kite: magnitude and unit direction (the
/// direction the air moves past the kite). Direction is zero when the
/// magnitude is zero.
pub fn apparent_wind(state: &KiteState, wind_speed: f64) -> (f64, Vec2) {
    let rel = Vec2::new(wind_speed - state.vx, -state.vz);
    let mag = rel.norm();
    if mag > 0.0 {
        (mag, rel * (1.0 / mag))
    } else {
        (0.0, Vec2::ZERO)
    }
}

/// Lift and drag for a relative air velocity vector.
///
/// Drag acts along the airflow; lift is perpendicular to it in the vertical
/// plane, on the upward side.
pub fn aero_forces(apparent: Vec2, c: &PhysicalConstants) -> (Vec2, Vec2) {
    let v = apparent.norm();
    if v == 0.0 {
        return (Vec2::ZERO, Vec2::ZERO);
    }
    let q = 0.5 * c.air_density_kg_m3 * c.wing_area_m2 * v;
    let drag = apparent * (q * c.drag_coeff);
    let mut perp = Vec2::new(-apparent.z, apparent.x);
    if perp.z < 0.0 || (perp.z == 0.0 && perp.x < 0.0) {
        perp = -perp;
    }
    let lift = perp * (q * c.lift_coeff);
    (lift, drag)
}

/// Lift coefficient at which lift balances the flight-unit weight
/// (kite plus unit, tether excluded) in a wind of `target_sustain_wind`.
pub fn calibrate_lift_coeff(c: &PhysicalConstants, target_sustain_wind: f64) -> f64 {
    assert!(target_sustain_wind > 0.0, "sustain wind must be positive");
    let weight = c.flight_mass() * c.gravity_mps2;
    weight / (0.5 * c.air_density_kg_m3 * c.wing_area_m2 * target_sustain_wind.powi(2))
}

/// Advance the winch by one step.
///
/// The motor pulls with `duty/100 * F_max`. If that covers the tension the
/// line winds in; if tension exceeds pull plus the residual clutch hold the
/// line pays out; in between the spool is static.
///
/// `tension` is the tether tension with the spool held still and
/// `tension_gain` its increase per m/s of wind-in speed (zero for a slack
/// tether). The speed is solved against the tension it produces, which
/// keeps a stiff tether from chattering.
pub fn winch_step(
    winch: &WinchState,
    params: &WinchParams,
    gravity: f64,
    commanded_duty: f64,
    tension: f64,
    tension_gain: f64,
    dt: f64,
) -> WinchState {
    let duty = commanded_duty.clamp(0.0, 100.0);
    let pull = duty / 100.0 * params.max_pull_n(gravity);
    let holding = pull + params.brake_hold_n;
    let implicit = |gain: f64| gain / (1.0 + gain * tension_gain);
    let mut speed = if pull > 0.0 && pull >= tension {
        (implicit(params.k_motor) * (pull - tension)).min(params.max_takeup_mps)
    } else if tension > holding {
        -(implicit(params.k_clutch) * (tension - holding)).min(params.max_payout_mps)
    } else {
        0.0
    };
    let mut line_out = winch.line_out - speed * dt;
    if line_out < 0.0 {
        line_out = 0.0;
        speed = winch.line_out / dt;
    } else if line_out > params.capacity_m {
        line_out = params.capacity_m;
        speed = (winch.line_out - params.capacity_m) / dt;
    }
    WinchState {
        duty,
        line_out,
        line_speed: speed,
        encoder_m: winch.encoder_m + (winch.line_out - line_out).abs(),
    }
}

/// The whole plant: kite, tether and winch with their parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plant {
    pub constants: PhysicalConstants,
    pub params: PlantParams,
    pub winch: WinchParams,
}

impl Plant {
    pub fn new(constants: PhysicalConstants, params: PlantParams, winch: WinchParams) -> Self {
        Self {
            constants,
            params,
            winch,
        }
    }

    pub fn dt(&self) -> f64 {
        self.params.dt_s
    }

    fn max_pull(&self) -> f64 {
        self.winch.max_pull_n(self.constants.gravity_mps2)
    }

    /// Tether spring stiffness at a given paid-out length, N/m.
    pub fn tether_stiffness(&self, line_out: f64) -> f64 {
        let length = line_out.max(self.params.tether_stiffness_floor_m);
        self.max_pull() / (self.params.tether_stretch_at_max * length)
    }

    /// Tension of the unilateral spring-damper tether.
    pub fn tether_tension(&self, state: &KiteState, winch: &WinchState) -> f64 {
        let p = state.position();
        let dist = p.norm();
        if dist < winch.line_out || dist == 0.0 {
            return 0.0;
        }
        let u = p * (1.0 / dist);
        let stretch = dist - winch.line_out;
        let stretch_rate = state.velocity().dot(u) + winch.line_speed;
        let (k, c) = self.tether_coefficients(winch.line_out);
        (k * stretch + c * stretch_rate).max(0.0)
    }

    /// Spring stiffness (N/m) and damping (N·s/m) of the tether.
    fn tether_coefficients(&self, line_out: f64) -> (f64, f64) {
        let k = self.tether_stiffness(line_out);
        let m = self.constants.total_mass(line_out);
        (k, 2.0 * self.params.tether_damping_ratio * (k * m).sqrt())
    }

    /// One semi-implicit Euler step of the coupled kite and winch. The winch
    /// applies `winch.duty` against the tension of the previous step.
    pub fn step(&self, state: &KiteState, winch: &WinchState, wind_speed: f64) -> (KiteState, WinchState) {
        let dt = self.params.dt_s;
        let c = &self.constants;
        let p = state.position();
        let dist = p.norm();
        let rel = Vec2::new(wind_speed - state.vx, -state.vz);
        let (lift, drag) = aero_forces(rel, c);
        let weight = |line: f64| Vec2::new(0.0, -c.total_mass(line) * c.gravity_mps2);

        // Spool and kite are solved together along the line: the winch sees
        // the tension this step would end with if the spool stood still,
        // and how fast that tension falls per m/s of payout.
        let held = self.radial_solve(state, winch.line_out, 0.0, lift + drag + weight(winch.line_out));
        let winch = winch_step(winch, &self.winch, c.gravity_mps2, winch.duty, held.0, held.1, dt);

        let m = c.total_mass(winch.line_out);
        let free = lift + drag + weight(winch.line_out);
        let tension = self.radial_solve(state, winch.line_out, winch.line_speed, free).0;
        let tether = if tension > 0.0 { -(p * (tension / dist)) } else { Vec2::ZERO };
        let mut force = free + tether;

        let mut v = state.velocity();
        if state.z <= 0.0 && force.z < 0.0 {
            // Ground reaction plus Coulomb friction on the sliding kite.
            let normal = -force.z;
            force.z = 0.0;
            let friction = self.params.ground_friction * normal;
            let vx_free = v.x + force.x * dt / m;
            if vx_free.abs() <= friction * dt / m {
                force.x = 0.0;
                v.x = 0.0;
            } else {
                force.x -= friction * vx_free.signum();
            }
        }

        v = v + force * (dt / m);
        let mut pos = p + v * dt;
        if pos.z <= 0.0 {
            pos.z = 0.0;
            if v.z < 0.0 {
                v.z = 0.0;
            }
        }
        let next = KiteState {
            x: pos.x,
            z: pos.z,
            vx: v.x,
            vz: v.z,
            tension,
            airborne: pos.z > 0.0,
        };
        (next, winch)
    }

    /// Backward-Euler tension of the taut line over the coming step, given
    /// the line length and spool speed at its end, and the tension's
    /// sensitivity to spool speed. Both are zero if the line ends slack.
    fn radial_solve(&self, state: &KiteState, line_out: f64, line_speed: f64, free: Vec2) -> (f64, f64) {
        let p = state.position();
        let dist = p.norm();
        if dist == 0.0 {
            return (0.0, 0.0);
        }
        let dt = self.params.dt_s;
        let m = self.constants.total_mass(line_out);
        let u = p * (1.0 / dist);
        let a = dt / m;
        let radial_free = state.velocity().dot(u) + a * free.dot(u);
        let s0 = dist - line_out;
        if s0 + dt * radial_free <= 0.0 {
            return (0.0, 0.0);
        }
        let (k, c) = self.tether_coefficients(line_out);
        let g = k * dt + c;
        let b = 1.0 + g * a;
        let tension = (k * s0 + c * line_speed + g * radial_free) / b;
        if tension > 0.0 {
            (tension, g / b)
        } else {
            (0.0, 0.0)
        }
    }

    /// Kinetic + gravitational + tether elastic energy, J.
    pub fn mechanical_energy(&self, state: &KiteState, winch: &WinchState) -> f64 {
        let m = self.constants.total_mass(winch.line_out);
        let kinetic = 0.5 * m * state.velocity().dot(state.velocity());
        let potential = m * self.constants.gravity_mps2 * state.z;
        let stretch = (state.distance() - winch.line_out).max(0.0);
        let elastic = 0.5 * self.tether_stiffness(winch.line_out) * stretch * stretch;
        kinetic + potential + elastic
    }
}
