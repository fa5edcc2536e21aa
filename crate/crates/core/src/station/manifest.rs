use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::log::{write_log, FlightLog};
use super::session::{run_scenario, LinkOptions, RunOptions, Seeds};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::scenarios::Scenario;
use crate::sensors::SensorModel;

pub const LOG_FILE: &str = "flight_log.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
/// Altitude above which the kite counts as aloft, m.
pub const ALOFT_MIN_ALT_M: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub records: usize,
    pub max_altitude_m: f64,
    pub time_aloft_s: f64,
    pub line_travel_m: f64,
    pub final_mode: String,
}

impl RunSummary {
    pub fn of(log: &FlightLog) -> Self {
        let period = log.period().unwrap_or(0.0);
        let aloft = log.records.iter().filter(|r| r.alt_m > ALOFT_MIN_ALT_M).count();
        Self {
            records: log.len(),
            max_altitude_m: log.max_altitude(),
            time_aloft_s: aloft as f64 * period,
            line_travel_m: log.line_travel(),
            final_mode: log.records.last().map_or_else(String::new, |r| r.mode.to_string()),
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub started_unix_ms: u64,
    pub duration_s: f64,
    pub config: Config,
    pub scenario: Scenario,
    pub seeds: Seeds,
    pub link: LinkOptions,
    pub sensors: SensorModel,
    pub summary: RunSummary,
    pub log_file: String,
    pub log_sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Stable id derived from the run inputs only.
pub fn run_id(cfg: &Config, scenario: &Scenario, duration_s: f64, opts: &RunOptions) -> String {
    let inputs = serde_json::json!({
        "config": cfg,
        "scenario": scenario,
        "duration_s": duration_s,
        "options": opts,
    });
    sha256_hex(inputs.to_string().as_bytes())[..16].to_string()
}

impl RunManifest {
    pub fn new(cfg: &Config, scenario: &Scenario, duration_s: f64, opts: &RunOptions, log: &FlightLog) -> Self {
        let started_unix_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64);
        Self {
            run_id: run_id(cfg, scenario, duration_s, opts),
            started_unix_ms,
            duration_s,
            config: cfg.clone(),
            scenario: scenario.clone(),
            seeds: opts.seeds,
            link: opts.link,
            sensors: opts.sensors,
            summary: RunSummary::of(log),
            log_file: LOG_FILE.into(),
            log_sha256: sha256_hex(log.to_csv_string().as_bytes()),
        }
    }

    pub fn options(&self) -> RunOptions {
        RunOptions {
            seeds: self.seeds,
            link: self.link,
            sensors: self.sensors,
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("manifest: {e}")))
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<RunManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunManifest::from_json_str(&text)
}

/// Paths written by [`write_run`].
#[derive(Debug, Clone)]
pub struct RunFiles {
    pub log: PathBuf,
    pub manifest: PathBuf,
}

/// Write the log and manifest into `out_dir`, creating it if needed.
pub fn write_run(out_dir: impl AsRef<Path>, manifest: &RunManifest, log: &FlightLog) -> Result<RunFiles> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = RunFiles {
        log: dir.join(&manifest.log_file),
        manifest: dir.join(MANIFEST_FILE),
    };
    write_log(&files.log, log)?;
    std::fs::write(&files.manifest, manifest.to_json_string()).map_err(|e| Error::io(&files.manifest, e))?;
    Ok(files)
}

/// Run a scenario and persist it.
pub fn simulate_to_dir(
    cfg: &Config,
    scenario: &Scenario,
    duration_s: f64,
    opts: &RunOptions,
    out_dir: impl AsRef<Path>,
) -> Result<(FlightLog, RunManifest, RunFiles)> {
    let log = run_scenario(cfg, scenario, duration_s, opts)?;
    let manifest = RunManifest::new(cfg, scenario, duration_s, opts, &log);
    let files = write_run(out_dir, &manifest, &log)?;
    Ok((log, manifest, files))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayOutcome {
    pub run_id: String,
    pub records: usize,
    /// Regenerated log hashes to the value recorded in the manifest.
    pub matches_manifest: bool,
    /// Regenerated log equals the log file next to the manifest, if present.
    pub matches_log_file: Option<bool>,
}

impl ReplayOutcome {
    pub fn identical(&self) -> bool {
        self.matches_manifest && self.matches_log_file != Some(false)
    }
}

/// Re-run the flight described by a manifest and compare byte for byte.
pub fn replay(manifest_path: impl AsRef<Path>) -> Result<(ReplayOutcome, FlightLog)> {
    let manifest_path = manifest_path.as_ref();
    let m = load_manifest(manifest_path)?;
    let log = run_scenario(&m.config, &m.scenario, m.duration_s, &m.options())?;
    let text = log.to_csv_string();
    let log_path = manifest_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&m.log_file);
    let matches_log_file = match std::fs::read(&log_path) {
        Ok(bytes) => Some(bytes == text.as_bytes()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(Error::io(log_path, e)),
    };
    let outcome = ReplayOutcome {
        run_id: m.run_id.clone(),
        records: log.len(),
        matches_manifest: sha256_hex(text.as_bytes()) == m.log_sha256,
        matches_log_file,
    };
    Ok((outcome, log))
}
