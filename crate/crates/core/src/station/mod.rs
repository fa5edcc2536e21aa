//! Ground station: the closed-loop run, flight logs, run manifests and
//! replay, trail export, lag analysis and the live HTTP service.

mod kml;
mod lag;
mod log;
mod manifest;
mod server;
mod session;

pub use kml::{export_kml, kml_coordinates, kml_document, trail_from_log, TrailPoint};
pub use lag::{analyze_lag, best_lag, MAX_LAG_S, MIN_SAMPLES};
pub use log::{read_log, write_log, FlightLog, FlightLogRecord, LOG_HEADER};
pub use manifest::{
    load_manifest, replay, run_id, simulate_to_dir, write_run, ReplayOutcome, RunFiles, RunManifest, RunSummary,
    ALOFT_MIN_ALT_M, LOG_FILE, MANIFEST_FILE,
};
pub use session::{run_scenario, LinkOptions, RunOptions, Seeds, Session, Snapshot};
pub use server::{build, router, serve, Accepted, ApiError, AppStateHandle, RunInfo, RunStatus, ServeOptions};
