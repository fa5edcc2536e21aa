//! Live HTTP service. A single owner task advances the session; handlers talk
//! to it through a request queue and read the snapshots it publishes.

use std::convert::Infallible;
use std::future::Future;
use std::path::PathBuf;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{Stream, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, oneshot, watch};
use tokio_stream::wrappers::BroadcastStream;

use super::manifest::{run_id, write_run, RunManifest};
use super::session::{RunOptions, Session, Snapshot};
use crate::config::{Config, Violation, WindholdTable};
use crate::controller::{CommandError, OperatorCommand};
use crate::error::{Error, Result};
use crate::scenarios::Scenario;

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub duration_s: f64,
    /// Simulated seconds per wall-clock second.
    pub speed: f64,
    pub run: RunOptions,
    /// Where the finished run is written, if anywhere.
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Finished,
}

/// Entry of `GET /api/runs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub run_id: String,
    pub scenario: String,
    pub duration_s: f64,
    pub status: RunStatus,
    pub records: usize,
    pub t_s: f64,
    /// Operator commands or table changes were applied.
    pub intervened: bool,
    pub log_dir: Option<String>,
}

/// Reply of `POST /api/command` and `POST /api/config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accepted {
    pub accepted: bool,
    /// First tick that sees the change.
    pub effective_tick: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

enum Request {
    Command(OperatorCommand, oneshot::Sender<std::result::Result<u64, Rejection>>),
    Table(WindholdTable, oneshot::Sender<std::result::Result<u64, Rejection>>),
}

enum Rejection {
    Command(CommandError),
    Table(Vec<Violation>),
    Finished,
}

#[derive(Clone)]
struct AppState {
    requests: mpsc::Sender<Request>,
    state: watch::Receiver<Snapshot>,
    runs: watch::Receiver<Vec<RunInfo>>,
    stream: broadcast::Sender<Snapshot>,
}

fn error_response(status: StatusCode, error: String, violations: Vec<Violation>) -> Response {
    (status, Json(ApiError { error, violations })).into_response()
}

impl IntoResponse for Rejection {
    fn into_response(self) -> Response {
        match self {
            Rejection::Command(e @ CommandError::Transition(..)) => {
                error_response(StatusCode::CONFLICT, e.to_string(), Vec::new())
            }
            Rejection::Command(e) => error_response(StatusCode::BAD_REQUEST, e.to_string(), Vec::new()),
            Rejection::Table(v) => error_response(
                StatusCode::UNPROCESSABLE_ENTITY,
                "invalid threshold table".into(),
                v,
            ),
            Rejection::Finished => error_response(StatusCode::CONFLICT, "run finished".into(), Vec::new()),
        }
    }
}

fn bad_json(e: JsonRejection) -> Response {
    error_response(StatusCode::BAD_REQUEST, e.body_text(), Vec::new())
}

async fn get_state(State(app): State<AppState>) -> Json<Snapshot> {
    Json(app.state.borrow().clone())
}

async fn get_runs(State(app): State<AppState>) -> Json<Vec<RunInfo>> {
    Json(app.runs.borrow().clone())
}

async fn get_stream(State(app): State<AppState>) -> Sse<impl Stream<Item = std::result::Result<Event, Infallible>>> {
    let rx = app.stream.subscribe();
    let events = BroadcastStream::new(rx).filter_map(|msg| async move {
        let snap = msg.ok()?;
        Event::default().event("tick").json_data(&snap).ok().map(Ok)
    });
    Sse::new(events).keep_alive(KeepAlive::default())
}

async fn roundtrip(
    app: &AppState,
    make: impl FnOnce(oneshot::Sender<std::result::Result<u64, Rejection>>) -> Request,
) -> Response {
    let (tx, rx) = oneshot::channel();
    if app.requests.send(make(tx)).await.is_err() {
        return error_response(StatusCode::SERVICE_UNAVAILABLE, "simulation stopped".into(), Vec::new());
    }
    match rx.await {
        Ok(Ok(tick)) => Json(Accepted {
            accepted: true,
            effective_tick: tick,
        })
        .into_response(),
        Ok(Err(r)) => r.into_response(),
        Err(_) => error_response(StatusCode::SERVICE_UNAVAILABLE, "simulation stopped".into(), Vec::new()),
    }
}

async fn post_command(
    State(app): State<AppState>,
    body: std::result::Result<Json<OperatorCommand>, JsonRejection>,
) -> Response {
    match body {
        Ok(Json(cmd)) => roundtrip(&app, |tx| Request::Command(cmd, tx)).await,
        Err(e) => bad_json(e),
    }
}

async fn post_config(
    State(app): State<AppState>,
    body: std::result::Result<Json<WindholdTable>, JsonRejection>,
) -> Response {
    match body {
        Ok(Json(table)) => roundtrip(&app, |tx| Request::Table(table, tx)).await,
        Err(e) => bad_json(e),
    }
}

pub fn router(app: AppStateHandle) -> Router {
    Router::new()
        .route("/api/state", get(get_state))
        .route("/api/runs", get(get_runs))
        .route("/api/stream", get(get_stream))
        .route("/api/command", post(post_command))
        .route("/api/config", post(post_config))
        .with_state(app.0)
}

/// Opaque handle to the channels shared between the owner task and the handlers.
#[derive(Clone)]
pub struct AppStateHandle(AppState);

struct Owner {
    session: Session,
    info: RunInfo,
    runs: watch::Sender<Vec<RunInfo>>,
    state: watch::Sender<Snapshot>,
    stream: broadcast::Sender<Snapshot>,
    out_dir: Option<PathBuf>,
    opts: RunOptions,
}

impl Owner {
    fn handle(&mut self, req: Request) {
        let finished = self.session.finished();
        let tick = self.session.snapshot().tick;
        match req {
            Request::Command(cmd, reply) => {
                let r = if finished {
                    Err(Rejection::Finished)
                } else {
                    self.session.command(&cmd).map(|()| tick).map_err(Rejection::Command)
                };
                self.info.intervened |= r.is_ok();
                let _ = reply.send(r);
            }
            Request::Table(table, reply) => {
                let r = if finished {
                    Err(Rejection::Finished)
                } else {
                    self.session.set_windhold_table(&table).map(|()| tick).map_err(Rejection::Table)
                };
                self.info.intervened |= r.is_ok();
                let _ = reply.send(r);
            }
        }
    }

    fn publish(&mut self) {
        let snap = self.session.snapshot();
        self.info.records = self.session.log().len();
        self.info.t_s = snap.t_s;
        self.info.status = if snap.finished {
            RunStatus::Finished
        } else {
            RunStatus::Running
        };
        let _ = self.stream.send(snap.clone());
        self.state.send_replace(snap);
        self.runs.send_replace(vec![self.info.clone()]);
    }

    /// Persist the finished run. A manifest is written only when nobody
    /// intervened, since only then does it reproduce the log.
    fn persist(&mut self) -> Result<()> {
        let Some(dir) = self.out_dir.clone() else {
            return Ok(());
        };
        let log = self.session.log();
        if self.info.intervened {
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            super::log::write_log(dir.join(super::manifest::LOG_FILE), log)?;
        } else {
            let m = RunManifest::new(
                self.session.config(),
                self.session.scenario(),
                self.info.duration_s,
                &self.opts,
                log,
            );
            write_run(&dir, &m, log)?;
        }
        self.info.log_dir = Some(dir.display().to_string());
        self.runs.send_replace(vec![self.info.clone()]);
        Ok(())
    }
}

/// Build the service and the future that drives the simulation.
pub fn build(
    cfg: &Config,
    scenario: &Scenario,
    opts: &ServeOptions,
) -> Result<(AppStateHandle, impl Future<Output = Result<()>> + Send + 'static)> {
    if !(opts.speed.is_finite() && opts.speed > 0.0) {
        return Err(Error::Validation(vec![Violation::new("speed", "speed must be positive")]));
    }
    let session = Session::new(cfg, scenario, opts.duration_s, &opts.run)?;
    let info = RunInfo {
        run_id: run_id(cfg, scenario, opts.duration_s, &opts.run),
        scenario: scenario.name.clone(),
        duration_s: opts.duration_s,
        status: RunStatus::Running,
        records: 0,
        t_s: 0.0,
        intervened: false,
        log_dir: None,
    };
    let (state_tx, state_rx) = watch::channel(session.snapshot());
    let (runs_tx, runs_rx) = watch::channel(vec![info.clone()]);
    let (stream_tx, _) = broadcast::channel(1024);
    let (req_tx, mut req_rx) = mpsc::channel(64);
    let app = AppState {
        requests: req_tx,
        state: state_rx,
        runs: runs_rx,
        stream: stream_tx.clone(),
    };
    let tick = Duration::from_secs_f64(cfg.controller.period / opts.speed);
    let mut owner = Owner {
        session,
        info,
        runs: runs_tx,
        state: state_tx,
        stream: stream_tx,
        out_dir: opts.out_dir.clone(),
        opts: opts.run,
    };
    let driver = async move {
        let mut interval = tokio::time::interval(tick);
        interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        loop {
            if owner.session.finished() {
                match req_rx.recv().await {
                    Some(req) => owner.handle(req),
                    None => return Ok(()),
                }
                continue;
            }
            tokio::select! {
                req = req_rx.recv() => match req {
                    Some(req) => owner.handle(req),
                    None => return Ok(()),
                },
                _ = interval.tick() => {
                    owner.session.tick();
                    owner.publish();
                    if owner.session.finished() {
                        owner.persist()?;
                    }
                }
            }
        }
    };
    Ok((AppStateHandle(app), driver))
}

/// Serve until `shutdown` resolves. The run starts immediately.
pub async fn serve(
    listener: TcpListener,
    cfg: &Config,
    scenario: &Scenario,
    opts: &ServeOptions,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<()> {
    let (app, driver) = build(cfg, scenario, opts)?;
    let addr = listener.local_addr().map_err(|e| Error::io("listener", e))?;
    let driver = tokio::spawn(driver);
    axum::serve(listener, router(app))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|e| Error::io(addr.to_string(), e))?;
    driver.abort();
    match driver.await {
        Ok(r) => r,
        Err(_) => Ok(()),
    }
}
