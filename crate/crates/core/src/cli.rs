//! Command-line front end. Exit codes: 0 success, 1 invalid input, 2 I/O failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{load_config, Config};
use crate::error::{Error, Result};
use crate::scenarios::{load_scenario, Scenario};
use crate::sensors::GeoOrigin;
use crate::station::{
    analyze_lag, load_manifest, read_log, replay, simulate_to_dir, trail_from_log, kml_document, write_run,
    LinkOptions, RunManifest, RunOptions, RunSummary, ServeOptions, Session, MANIFEST_FILE,
};
use crate::tuning::{optimize, training_suite, TuneOptions, DEFAULT_LAMBDA};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;

pub const TUNED_CONFIG_FILE: &str = "tuned_config.json";
pub const TUNE_HISTORY_FILE: &str = "tune_history.csv";

#[derive(Debug, Parser)]
#[command(name = "kiteflight", version, about = "Tethered kite flight simulator and ground station")]
pub struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario and write the flight log and manifest.
    Sim(SimArgs),
    /// Re-run a manifest and compare with the recorded log.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Summarise a flight log.
    Analyze(AnalyzeArgs),
    /// Tune the wind-hold table on the training scenarios.
    Tune(TuneArgs),
    /// Run a live flight behind the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Config file; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Preset name or scenario file.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Simulated seconds; the scenario's own duration when omitted.
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Pace the run to the wall clock.
    #[arg(long)]
    pub realtime: bool,
    /// Frame loss probability on each link direction.
    #[arg(long, default_value_t = 0.0)]
    pub loss: f64,
    #[arg(long, default_value_t = 0)]
    pub latency_ms: u64,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub log: PathBuf,
    /// Estimate the wind-to-altitude lag.
    #[arg(long)]
    pub lag: bool,
    /// Write the reconstructed trail as KML.
    #[arg(long)]
    pub kml: Option<PathBuf>,
    /// Winch position for the trail; taken from a manifest next to the log when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub lat: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub budget: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Training scenario; repeat to replace the default suite.
    #[arg(long = "scenario")]
    pub scenarios: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: String,
    #[arg(long, default_value = "flight-6min")]
    pub scenario: String,
    #[arg(long)]
    pub duration: Option<f64>,
    /// Simulated seconds per wall-clock second.
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for the finished run.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_INVALID
    } else {
        EXIT_IO
    }
}

fn config_or_default(path: Option<&Path>) -> Result<Config> {
    path.map_or_else(|| Ok(Config::default()), load_config)
}

fn emit(json_mode: bool, value: serde_json::Value, text: String) {
    if json_mode {
        println!("{value}");
    } else {
        println!("{text}");
    }
}

fn summary_text(s: &RunSummary) -> String {
    format!(
        "records {}\nmax altitude {:.2} m\ntime aloft {:.1} s\nline travel {:.2} m\nfinal mode {}",
        s.records,
        s.max_altitude_m,
        s.time_aloft_s,
        s.line_travel_m,
        s.final_mode
    )
}

fn sim(a: &SimArgs, json_mode: bool) -> Result<i32> {
    let cfg = config_or_default(a.config.as_deref())?;
    let scenario = match &a.scenario {
        Some(s) => load_scenario(s)?,
        None => Scenario::from_config(&cfg),
    };
    let duration = a.duration.unwrap_or(scenario.duration_s);
    let opts = RunOptions {
        link: LinkOptions {
            loss: a.loss,
            latency_ms: a.latency_ms,
        },
        ..RunOptions::with_seed(a.seed)
    };
    let (manifest, files) = if a.realtime {
        let mut session = Session::new(&cfg, &scenario, duration, &opts)?;
        let start = Instant::now();
        while session.tick().is_some() {
            let due = Duration::from_secs_f64(session.t().min(duration));
            if let Some(wait) = due.checked_sub(start.elapsed()) {
                std::thread::sleep(wait);
            }
        }
        let log = session.into_log();
        let m = RunManifest::new(&cfg, &scenario, duration, &opts, &log);
        let files = write_run(&a.out, &m, &log)?;
        (m, files)
    } else {
        let (_, m, files) = simulate_to_dir(&cfg, &scenario, duration, &opts, &a.out)?;
        (m, files)
    };
    emit(
        json_mode,
        json!({
            "run_id": manifest.run_id,
            "log": files.log,
            "manifest": files.manifest,
            "summary": manifest.summary,
        }),
        format!(
            "run {}\n{}\nlog {}\nmanifest {}",
            manifest.run_id,
            summary_text(&manifest.summary),
            files.log.display(),
            files.manifest.display()
        ),
    );
    Ok(EXIT_OK)
}

fn replay_cmd(manifest: &Path, json_mode: bool) -> Result<i32> {
    let (outcome, _) = replay(manifest)?;
    let verdict = if outcome.identical() { "identical" } else { "MISMATCH" };
    emit(
        json_mode,
        serde_json::to_value(&outcome).expect("outcome serializes"),
        format!("run {}: {} records, {verdict}", outcome.run_id, outcome.records),
    );
    Ok(if outcome.identical() { EXIT_OK } else { EXIT_INVALID })
}

fn analyze(a: &AnalyzeArgs, json_mode: bool) -> Result<i32> {
    let log = read_log(&a.log)?;
    let summary = RunSummary::of(&log);
    let mut out = json!({ "summary": summary });
    let mut text = summary_text(&summary);
    if a.lag {
        let lag = analyze_lag(&log)?;
        out["lag_s"] = json!(lag);
        text.push_str(&format!("\nlag {lag:.1} s"));
    }
    if let Some(path) = &a.kml {
        if log.is_empty() {
            return Err(Error::Analysis("cannot export an empty log".into()));
        }
        let sibling = a.log.parent().unwrap_or(Path::new(".")).join(MANIFEST_FILE);
        let mut origin = match load_manifest(&sibling) {
            Ok(m) => m.sensors.origin,
            Err(_) => GeoOrigin::default(),
        };
        if let Some(lat) = a.lat {
            origin.lat_deg = lat;
        }
        if let Some(lon) = a.lon {
            origin.lon_deg = lon;
        }
        let doc = kml_document("flight trail", &trail_from_log(&log, &origin));
        std::fs::write(path, doc).map_err(|e| Error::io(path, e))?;
        out["kml"] = json!(path);
        text.push_str(&format!("\nkml {}", path.display()));
    }
    emit(json_mode, out, text);
    Ok(EXIT_OK)
}

fn tune(a: &TuneArgs, json_mode: bool) -> Result<i32> {
    let cfg = config_or_default(a.config.as_deref())?;
    let suite = if a.scenarios.is_empty() {
        training_suite()
    } else {
        a.scenarios.iter().map(|s| load_scenario(s)).collect::<Result<Vec<_>>>()?
    };
    if a.budget == 0 {
        return Err(Error::Validation(vec![crate::config::Violation::new(
            "budget",
            "budget must be at least 1",
        )]));
    }
    let opts = TuneOptions {
        budget: a.budget,
        lambda: a.lambda,
        run: RunOptions::with_seed(a.seed),
        ..Default::default()
    };
    let result = optimize(&cfg, &suite, &opts)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let cfg_path = a.out.join(TUNED_CONFIG_FILE);
    let hist_path = a.out.join(TUNE_HISTORY_FILE);
    std::fs::write(&cfg_path, result.best.to_json_string()).map_err(|e| Error::io(&cfg_path, e))?;
    std::fs::write(&hist_path, result.history_csv()).map_err(|e| Error::io(&hist_path, e))?;
    emit(
        json_mode,
        json!({
            "initial_objective": result.initial_objective,
            "best_objective": result.best_objective,
            "evaluations": result.history.len(),
            "thresholds_mps": result.best.controller.thresholds.iter()
                .map(|w| if w.is_finite() { Some(*w) } else { None }).collect::<Vec<_>>(),
            "deltas_pct": result.best.controller.deltas,
            "config": cfg_path,
            "history": hist_path,
        }),
        format!(
            "objective {:.6} -> {:.6} after {} evaluations\ndeltas {:?}\nconfig {}\nhistory {}",
            result.initial_objective,
            result.best_objective,
            result.history.len(),
            result.best.controller.deltas,
            cfg_path.display(),
            hist_path.display()
        ),
    );
    Ok(EXIT_OK)
}

fn serve_cmd(a: &ServeArgs) -> Result<i32> {
    let cfg = config_or_default(a.config.as_deref())?;
    let scenario = load_scenario(&a.scenario)?;
    let opts = ServeOptions {
        duration_s: a.duration.unwrap_or(scenario.duration_s),
        speed: a.speed,
        run: RunOptions::with_seed(a.seed),
        out_dir: a.out.clone(),
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::io("runtime", e))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&a.bind)
            .await
            .map_err(|e| Error::io(&a.bind, e))?;
        let addr = listener.local_addr().map_err(|e| Error::io(&a.bind, e))?;
        eprintln!("serving {} on http://{addr}", scenario.name);
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        crate::station::serve(listener, &cfg, &scenario, &opts, shutdown).await
    })?;
    Ok(EXIT_OK)
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Sim(a) => sim(a, cli.json),
        Command::Replay { manifest } => replay_cmd(manifest, cli.json),
        Command::Analyze(a) => analyze(a, cli.json),
        Command::Tune(a) => tune(a, cli.json),
        Command::Serve(a) => serve_cmd(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            if cli.json {
                println!("{}", json!({ "error": e.to_string() }));
            }
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
