//! Derivative-free tuning of the wind-hold table against scripted scenarios.
//!
//! The objective is piecewise constant in the thresholds, so the search is a
//! projected coordinate search: deltas first, then interior thresholds, with
//! the step halved after a sweep that finds nothing better.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Config, ControllerConfig};
use crate::error::Result;
use crate::scenarios::Scenario;
use crate::station::{run_scenario, FlightLog, RunOptions, ALOFT_MIN_ALT_M};

pub const DEFAULT_LAMBDA: f64 = 0.1;
/// Names of the training scenarios.
pub const TRAINING_SUITE: [&str; 3] = ["steady-4mps", "gusty", "lull"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlightMetrics {
    pub time_aloft_fraction: f64,
    pub mean_altitude: f64,
    pub altitude_variance: f64,
    /// Total spool travel, m.
    pub line_travel: f64,
    /// Touched the ground again after having been aloft.
    pub crashed: bool,
    pub objective: f64,
}

impl FlightMetrics {
    /// Reduce a log. Travel is normalised by the distance the winch could
    /// wind in over the whole run at full speed.
    pub fn from_log(log: &FlightLog, travel_normalizer: f64, lambda: f64) -> Self {
        let n = log.len().max(1) as f64;
        let alts: Vec<f64> = log.records.iter().map(|r| r.alt_m).collect();
        let aloft = alts.iter().filter(|a| **a > ALOFT_MIN_ALT_M).count() as f64 / n;
        let mean = alts.iter().sum::<f64>() / n;
        let var = alts.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        let travel = log.line_travel();
        let crashed = alts
            .iter()
            .position(|a| *a > ALOFT_MIN_ALT_M)
            .is_some_and(|first| alts[first..].iter().any(|a| *a <= 0.0));
        let objective = aloft - lambda * travel / travel_normalizer.max(f64::MIN_POSITIVE);
        Self {
            time_aloft_fraction: aloft,
            mean_altitude: mean,
            altitude_variance: var,
            line_travel: travel,
            crashed,
            objective,
        }
    }
}

/// Run one scenario over its own duration and reduce the log.
pub fn evaluate(cfg: &Config, scenario: &Scenario, opts: &RunOptions, lambda: f64) -> Result<FlightMetrics> {
    let log = run_scenario(cfg, scenario, scenario.duration_s, opts)?;
    let normalizer = cfg.winch.max_takeup_mps * scenario.duration_s;
    Ok(FlightMetrics::from_log(&log, normalizer, lambda))
}

/// Mean objective over a suite.
pub fn suite_objective(cfg: &Config, suite: &[Scenario], opts: &RunOptions, lambda: f64) -> Result<f64> {
    let results: Vec<Result<FlightMetrics>> = std::thread::scope(|s| {
        let handles: Vec<_> = suite
            .iter()
            .map(|sc| s.spawn(move || evaluate(cfg, sc, opts, lambda)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("evaluation panicked")).collect()
    });
    let mut total = 0.0;
    for r in results {
        total += r?.objective;
    }
    Ok(total / suite.len().max(1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneOptions {
    /// Maximum number of suite evaluations, including the initial one.
    pub budget: usize,
    pub lambda: f64,
    /// Initial step on the deltas, percent per tick.
    pub delta_step: f64,
    /// Initial step on the thresholds, m/s.
    pub threshold_step: f64,
    /// Smallest gap kept between neighbouring thresholds, m/s.
    pub min_gap: f64,
    pub run: RunOptions,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            budget: 200,
            lambda: DEFAULT_LAMBDA,
            delta_step: 12.5,
            threshold_step: 0.5,
            min_gap: 0.05,
            run: RunOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneRecord {
    pub evaluation: usize,
    pub objective: f64,
    pub best_objective: f64,
    pub config_hash: String,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct TuneResult {
    pub best: Config,
    pub best_objective: f64,
    pub initial_objective: f64,
    pub history: Vec<TuneRecord>,
}

impl TuneResult {
    pub fn history_csv(&self) -> String {
        let mut out = String::from("evaluation,objective,best_objective,config_hash,accepted\n");
        for r in &self.history {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.evaluation, r.objective, r.best_objective, r.config_hash, r.accepted
            ));
        }
        out
    }
}

/// Short content hash of the wind-hold table.
pub fn config_hash(c: &ControllerConfig) -> String {
    let text = format!("{:?}|{:?}", c.thresholds, c.deltas);
    Sha256::digest(text.as_bytes())
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Set `deltas[i]` and restore the non-increasing order around it.
pub fn project_delta(c: &ControllerConfig, i: usize, value: f64) -> ControllerConfig {
    let mut next = c.clone();
    let v = value.clamp(-c.d_max, c.d_max);
    next.deltas[i] = v;
    for d in &mut next.deltas[..i] {
        *d = d.max(v);
    }
    for d in &mut next.deltas[i + 1..] {
        *d = d.min(v);
    }
    next
}

/// Set interior threshold `i` (1..n), clamped between its neighbours.
/// `None` if there is no room.
pub fn project_threshold(c: &ControllerConfig, i: usize, value: f64, min_gap: f64) -> Option<ControllerConfig> {
    let w = &c.thresholds;
    if i == 0 || i + 1 >= w.len() {
        return None;
    }
    let lo = w[i - 1] + min_gap;
    let hi = if w[i + 1].is_finite() { w[i + 1] - min_gap } else { f64::INFINITY };
    if lo > hi {
        return None;
    }
    let mut next = c.clone();
    next.thresholds[i] = value.clamp(lo, hi);
    Some(next)
}

enum Coord {
    Delta(usize),
    Threshold(usize),
}

/// Projected coordinate search over the wind-hold table. The best config
/// seen is returned; its objective never falls below the initial one.
pub fn optimize(initial: &Config, suite: &[Scenario], opts: &TuneOptions) -> Result<TuneResult> {
    let mut history = Vec::new();
    let mut best = initial.clone();
    let mut best_obj = suite_objective(&best, suite, &opts.run, opts.lambda)?;
    let initial_objective = best_obj;
    history.push(TuneRecord {
        evaluation: 1,
        objective: best_obj,
        best_objective: best_obj,
        config_hash: config_hash(&best.controller),
        accepted: true,
    });

    let n = initial.controller.deltas.len();
    let coords: Vec<Coord> = (0..n)
        .map(Coord::Delta)
        .chain((1..initial.controller.thresholds.len() - 1).map(Coord::Threshold))
        .collect();
    let mut delta_step = opts.delta_step;
    let mut threshold_step = opts.threshold_step;
    let min_delta_step = opts.delta_step / 64.0;

    while history.len() < opts.budget && delta_step >= min_delta_step {
        let mut improved = false;
        for coord in &coords {
            for sign in [1.0, -1.0] {
                if history.len() >= opts.budget {
                    break;
                }
                let c = &best.controller;
                let candidate = match *coord {
                    Coord::Delta(i) => Some(project_delta(c, i, c.deltas[i] + sign * delta_step)),
                    Coord::Threshold(i) => {
                        project_threshold(c, i, c.thresholds[i] + sign * threshold_step, opts.min_gap)
                    }
                };
                let Some(candidate) = candidate else { continue };
                if candidate == *c || !candidate.validate().is_empty() {
                    continue;
                }
                let cfg = Config {
                    controller: candidate,
                    ..best.clone()
                };
                let obj = suite_objective(&cfg, suite, &opts.run, opts.lambda)?;
                let accepted = obj > best_obj;
                if accepted {
                    best = cfg;
                    best_obj = obj;
                    improved = true;
                }
                history.push(TuneRecord {
                    evaluation: history.len() + 1,
                    objective: obj,
                    best_objective: best_obj,
                    config_hash: config_hash(&best.controller),
                    accepted,
                });
                if accepted {
                    break;
                }
            }
        }
        if !improved {
            delta_step /= 2.0;
            threshold_step /= 2.0;
        }
    }
    Ok(TuneResult {
        best,
        best_objective: best_obj,
        initial_objective,
        history,
    })
}

/// The training suite as scenarios.
pub fn training_suite() -> Vec<Scenario> {
    TRAINING_SUITE
        .iter()
        .map(|n| Scenario::preset(n).expect("training preset exists"))
        .collect()
}
