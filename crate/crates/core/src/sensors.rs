//! Flight-unit sensor models: two-axis anemometer, barometer, GPS and IMU.
//!
//! All noise is drawn from a caller-owned seeded RNG, so a reading sequence
//! is reproducible from the seed.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::physics::{KiteState, Vec2};

/// Standard sea-level pressure, Pa.
pub const SEA_LEVEL_PRESSURE: f64 = 101_325.0;

/// Mean Earth radius used by the equirectangular projection, m.
const EARTH_RADIUS_M: f64 = 6_378_137.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SensorReading {
    pub t: f64,
    pub wind_x: f64,
    pub wind_y: f64,
    pub pressure: f64,
    pub baro_alt: f64,
    pub lat: f64,
    pub lon: f64,
    pub gps_alt: f64,
    /// Specific force, m/s².
    pub accel: [f64; 3],
    /// Body rates, deg/s.
    pub gyro: [f64; 3],
}

impl SensorReading {
    pub fn wind_speed(&self) -> f64 {
        combined_speed(self.wind_x, self.wind_y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnemometerModel {
    /// Relative (multiplicative) noise, 1σ.
    pub gain_sigma: f64,
    /// Additive noise, m/s, 1σ.
    pub offset_sigma: f64,
    /// Speeds below this read zero, m/s.
    pub startup_threshold: f64,
}

impl AnemometerModel {
    pub fn noiseless() -> Self {
        Self {
            gain_sigma: 0.0,
            offset_sigma: 0.0,
            ..Default::default()
        }
    }
}

impl Default for AnemometerModel {
    fn default() -> Self {
        Self {
            gain_sigma: 0.03,
            offset_sigma: 0.05,
            startup_threshold: 0.2,
        }
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
}

/// Read the two orthogonal impeller anemometers.
///
/// `apparent` is the air velocity relative to the flight unit; `tilt_deg`
/// rotates the body axes away from the horizontal. Impellers measure speed,
/// not sign, so each axis reads the magnitude of its component.
pub fn anemometer_read<R: Rng + ?Sized>(
    apparent: Vec2,
    tilt_deg: f64,
    model: &AnemometerModel,
    rng: &mut R,
) -> (f64, f64) {
    let speed = apparent.norm();
    if speed < model.startup_threshold {
        return (0.0, 0.0);
    }
    let rel = apparent.z.atan2(apparent.x) - tilt_deg.to_radians();
    let axes = [speed * rel.cos().abs(), speed * rel.sin().abs()];
    let read = axes.map(|c| {
        let gain = 1.0 + gaussian(rng, model.gain_sigma);
        (c * gain + gaussian(rng, model.offset_sigma)).max(0.0)
    });
    (read[0], read[1])
}

/// Wind magnitude from the two orthogonal axes.
pub fn combined_speed(wind_x: f64, wind_y: f64) -> f64 {
    wind_x.hypot(wind_y)
}

/// Height above the reference from the standard-atmosphere pressure ratio.
pub fn baro_altitude(pressure: f64, ground_pressure: f64) -> f64 {
    44_330.0 * (1.0 - (pressure / ground_pressure).powf(0.190_263))
}

/// Inverse of [`baro_altitude`].
pub fn pressure_at_altitude(altitude: f64, ground_pressure: f64) -> f64 {
    ground_pressure * (1.0 - altitude / 44_330.0).powf(1.0 / 0.190_263)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeoOrigin {
    pub lat_deg: f64,
    pub lon_deg: f64,
    /// Ground elevation above the datum, m.
    pub elevation_m: f64,
    /// Compass bearing the wind blows toward (the +x axis), degrees.
    pub bearing_deg: f64,
}

impl Default for GeoOrigin {
    fn default() -> Self {
        Self {
            lat_deg: 0.0,
            lon_deg: 0.0,
            elevation_m: 0.0,
            bearing_deg: 90.0,
        }
    }
}

impl GeoOrigin {
    /// Latitude/longitude of a point `downwind` metres along the bearing.
    pub fn project(&self, downwind: f64) -> (f64, f64) {
        self.offset(downwind * self.bearing_deg.to_radians().cos(), downwind * self.bearing_deg.to_radians().sin())
    }

    /// Local equirectangular offset by north/east metres.
    pub fn offset(&self, north: f64, east: f64) -> (f64, f64) {
        let m_per_deg = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        let lat = self.lat_deg + north / m_per_deg;
        let lon = self.lon_deg + east / (m_per_deg * self.lat_deg.to_radians().cos());
        (lat, lon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpsModel {
    pub horizontal_sigma_m: f64,
    pub vertical_sigma_m: f64,
}

impl Default for GpsModel {
    fn default() -> Self {
        Self {
            horizontal_sigma_m: 2.5,
            vertical_sigma_m: 5.0,
        }
    }
}

/// GPS fix for a kite `true_x` metres downwind at altitude `true_z`.
pub fn gps_read<R: Rng + ?Sized>(
    true_x: f64,
    true_z: f64,
    origin: &GeoOrigin,
    model: &GpsModel,
    rng: &mut R,
) -> (f64, f64, f64) {
    let b = origin.bearing_deg.to_radians();
    let north = true_x * b.cos() + gaussian(rng, model.horizontal_sigma_m);
    let east = true_x * b.sin() + gaussian(rng, model.horizontal_sigma_m);
    let (lat, lon) = origin.offset(north, east);
    let alt = origin.elevation_m + true_z + gaussian(rng, model.vertical_sigma_m);
    (lat, lon, alt)
}

/// Noise settings for the whole suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorModel {
    pub anemometer: AnemometerModel,
    pub gps: GpsModel,
    pub origin: GeoOrigin,
    pub ground_pressure_pa: f64,
    pub pressure_sigma_pa: f64,
    pub accel_sigma: f64,
    pub gyro_sigma: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            anemometer: AnemometerModel::default(),
            gps: GpsModel::default(),
            origin: GeoOrigin::default(),
            ground_pressure_pa: SEA_LEVEL_PRESSURE,
            pressure_sigma_pa: 1.0,
            accel_sigma: 0.05,
            gyro_sigma: 0.5,
        }
    }
}

/// Sensor package with its own noise stream.
#[derive(Debug, Clone)]
pub struct SensorSuite {
    pub model: SensorModel,
    rng: ChaCha8Rng,
    prev: Option<(f64, KiteState)>,
}

/// Body tilt of the flight unit: it hangs aligned with the tether.
fn tilt_deg(state: &KiteState) -> f64 {
    if state.x == 0.0 && state.z == 0.0 {
        0.0
    } else {
        state.z.atan2(state.x).to_degrees()
    }
}

impl SensorSuite {
    pub fn new(model: SensorModel, seed: u64) -> Self {
        Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
            prev: None,
        }
    }

    /// Sample every sensor at time `t`.
    pub fn sample(&mut self, t: f64, state: &KiteState, wind_speed: f64) -> SensorReading {
        let m = self.model;
        let rng = &mut self.rng;
        let apparent = Vec2::new(wind_speed - state.vx, -state.vz);
        let tilt = tilt_deg(state);
        let (wind_x, wind_y) = anemometer_read(apparent, tilt, &m.anemometer, rng);

        let pressure = (pressure_at_altitude(state.z, m.ground_pressure_pa)
            + gaussian(rng, m.pressure_sigma_pa))
        .clamp(30_000.0, 110_000.0);
        let baro_alt = baro_altitude(pressure, m.ground_pressure_pa);
        let (lat, lon, gps_alt) = gps_read(state.x, state.z, &m.origin, &m.gps, rng);

        let g = crate::config::STANDARD_GRAVITY;
        let (accel, pitch_rate) = match self.prev {
            Some((t0, prev)) if t > t0 => {
                let dt = t - t0;
                let ax = (state.vx - prev.vx) / dt;
                let az = (state.vz - prev.vz) / dt;
                ([ax, 0.0, az + g], (tilt - tilt_deg(&prev)) / dt)
            }
            _ => ([0.0, 0.0, g], 0.0),
        };
        let accel = accel.map(|a| a + gaussian(rng, m.accel_sigma));
        let gyro = [0.0, pitch_rate, 0.0].map(|w| w + gaussian(rng, m.gyro_sigma));
        self.prev = Some((t, *state));

        SensorReading {
            t,
            wind_x,
            wind_y,
            pressure,
            baro_alt,
            lat,
            lon,
            gps_alt,
            accel,
            gyro,
        }
    }
}
