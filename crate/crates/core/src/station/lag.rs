use super::log::FlightLog;
use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 60;
pub const MAX_LAG_S: f64 = 30.0;

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        None
    } else {
        Some(sab / (saa * sbb).sqrt())
    }
}

/// Delay of `response` behind `driver`, in samples: the shift in
/// `[0, max_lag]` maximising their normalised cross-correlation. At least
/// half the series overlaps at every shift tried.
pub fn best_lag(driver: &[f64], response: &[f64], max_lag: usize) -> Option<(usize, f64)> {
    let n = driver.len().min(response.len());
    let max_lag = max_lag.min(n / 2);
    let mut best: Option<(usize, f64)> = None;
    for k in 0..=max_lag {
        if let Some(r) = pearson(&driver[..n - k], &response[k..n]) {
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((k, r));
            }
        }
    }
    best
}

/// Time by which altitude follows the measured wind, s.
pub fn analyze_lag(log: &FlightLog) -> Result<f64> {
    if log.len() < MIN_SAMPLES {
        return Err(Error::Analysis(format!(
            "log too short: {} samples, need at least {MIN_SAMPLES}",
            log.len()
        )));
    }
    let period = log.period().filter(|p| *p > 0.0).ok_or_else(|| Error::Analysis("bad sample spacing".into()))?;
    let wind: Vec<f64> = log.records.iter().map(|r| r.wind_mps).collect();
    let alt: Vec<f64> = log.records.iter().map(|r| r.alt_m).collect();
    let max_lag = (MAX_LAG_S / period).round() as usize;
    best_lag(&wind, &alt, max_lag)
        .map(|(k, _)| k as f64 * period)
        .ok_or_else(|| Error::Analysis("no transient: wind or altitude has zero variance".into()))
}
