/// Fixed-step simulation clock.
///
/// Time is derived from an integer tick count so that `t` never drifts from
/// `tick_index * dt` through repeated float addition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    dt: f64,
    tick_index: u64,
}

impl SimClock {
    pub fn new(dt: f64) -> Self {
        assert!(dt > 0.0 && dt.is_finite(), "clock step must be positive");
        Self { dt, tick_index: 0 }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn tick_index(&self) -> u64 {
        self.tick_index
    }

    pub fn t(&self) -> f64 {
        self.tick_index as f64 * self.dt
    }

    pub fn advance(&mut self) {
        self.tick_index += 1;
    }

    /// Number of whole steps of this clock that fit in `span` seconds,
    /// rounded to the nearest integer.
    pub fn steps_in(&self, span: f64) -> u64 {
        (span / self.dt).round().max(0.0) as u64
    }
}
