use serde::{Deserialize, Serialize};

use super::log::{FlightLog, FlightLogRecord};
use crate::config::{Config, Violation, WindholdTable};
use crate::controller::{
    apply_command, controller_tick, CommandError, ControllerMode, ControllerState, OperatorCommand, TickInput,
};
use crate::error::{Error, Result};
use crate::physics::{KiteState, Plant, WinchState};
use crate::scenarios::Scenario;
use crate::sensors::{SensorModel, SensorReading, SensorSuite};
use crate::telemetry::{
    encode_frame, CommandPayload, FrameParser, LossyChannel, Payload, TelemetryFrame, TelemetryPayload,
};

/// Seeds of every random stream in a run besides the wind noise, which the
/// scenario carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub sensors: u64,
    pub downlink: u64,
    pub uplink: u64,
}

impl Seeds {
    pub fn from_master(seed: u64) -> Self {
        Self {
            sensors: seed,
            downlink: seed.wrapping_add(0x9E37_79B9_7F4A_7C15),
            uplink: seed.wrapping_add(0x3C6E_F372_FE94_F82A),
        }
    }
}

impl Default for Seeds {
    fn default() -> Self {
        Self::from_master(0)
    }
}

/// Radio link impairments, applied to both directions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkOptions {
    pub loss: f64,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunOptions {
    pub seeds: Seeds,
    pub link: LinkOptions,
    pub sensors: SensorModel,
}

impl RunOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seeds: Seeds::from_master(seed),
            ..Default::default()
        }
    }
}

/// Immutable view of the live run after a tick. The flat fields repeat the
/// latest log record; `kite` and `winch` hold the state the next tick starts
/// from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub tick: u64,
    pub t_s: f64,
    pub mode: ControllerMode,
    pub duty_pct: f64,
    pub wind_mps: f64,
    pub line_m: f64,
    pub alt_m: f64,
    #[serde(rename = "tension_N")]
    pub tension_n: f64,
    pub seq: u16,
    pub stage_index: usize,
    pub telemetry_lost: bool,
    pub kite: KiteState,
    pub winch: WinchState,
    pub finished: bool,
}

/// One closed-loop flight: flight unit sensors, telemetry downlink, ground
/// controller, command uplink, winch and kite dynamics.
#[derive(Debug, Clone)]
pub struct Session {
    cfg: Config,
    scenario: Scenario,
    plant: Plant,
    kite: KiteState,
    winch: WinchState,
    sensors: SensorSuite,
    downlink: LossyChannel,
    uplink: LossyChannel,
    ground_rx: FrameParser,
    winch_rx: FrameParser,
    controller: ControllerState,
    last_reading: Option<SensorReading>,
    last_rx_seq: u16,
    down_seq: u16,
    up_seq: u16,
    winch_duty: f64,
    tick: u64,
    n_ticks: u64,
    steps_per_tick: u64,
    log: FlightLog,
}

fn invalid(v: Vec<Violation>) -> Result<()> {
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(v))
    }
}

impl Session {
    pub fn new(cfg: &Config, scenario: &Scenario, duration_s: f64, opts: &RunOptions) -> Result<Self> {
        invalid(cfg.validate())?;
        invalid(scenario.validate(cfg))?;
        if !(duration_s.is_finite() && duration_s > 0.0) {
            return Err(Error::Validation(vec![Violation {
                field: "duration_s".into(),
                message: "duration must be positive".into(),
            }]));
        }
        if !(0.0..=1.0).contains(&opts.link.loss) {
            return Err(Error::Validation(vec![Violation {
                field: "link.loss".into(),
                message: "loss must be in [0, 1]".into(),
            }]));
        }
        let mut winch_params = cfg.winch;
        if scenario.start.lock_line {
            winch_params.max_takeup_mps = 0.0;
            winch_params.brake_hold_n = f64::INFINITY;
        }
        let plant = Plant::new(cfg.physics, cfg.plant, winch_params);
        let period = cfg.controller.period;
        let steps_per_tick = (period / cfg.plant.dt_s).round() as u64;
        let n_ticks = (duration_s / period).round() as u64;
        Ok(Self {
            cfg: cfg.clone(),
            scenario: scenario.clone(),
            plant,
            kite: scenario.start.kite(),
            winch: scenario.start.winch(),
            sensors: SensorSuite::new(opts.sensors, opts.seeds.sensors),
            downlink: LossyChannel::new(opts.link.loss, opts.link.latency_ms, opts.seeds.downlink),
            uplink: LossyChannel::new(opts.link.loss, opts.link.latency_ms, opts.seeds.uplink),
            ground_rx: FrameParser::new(),
            winch_rx: FrameParser::new(),
            controller: ControllerState::in_mode(scenario.start.mode, 0.0),
            last_reading: None,
            last_rx_seq: 0,
            down_seq: 0,
            up_seq: 0,
            winch_duty: 0.0,
            tick: 0,
            n_ticks,
            steps_per_tick,
            log: FlightLog::default(),
        })
    }

    pub fn t(&self) -> f64 {
        self.tick as f64 * self.cfg.controller.period
    }

    /// True once the record at the final time has been produced.
    pub fn finished(&self) -> bool {
        self.tick > self.n_ticks
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn controller(&self) -> &ControllerState {
        &self.controller
    }

    pub fn kite(&self) -> &KiteState {
        &self.kite
    }

    pub fn winch(&self) -> &WinchState {
        &self.winch
    }

    pub fn log(&self) -> &FlightLog {
        &self.log
    }

    pub fn into_log(self) -> FlightLog {
        self.log
    }

    /// Operator command; takes effect on the next tick.
    pub fn command(&mut self, cmd: &OperatorCommand) -> std::result::Result<(), CommandError> {
        self.controller = apply_command(&self.controller, cmd, &self.cfg.controller, self.t())?;
        Ok(())
    }

    /// Swap the wind-hold threshold table; takes effect on the next tick.
    pub fn set_windhold_table(&mut self, table: &WindholdTable) -> std::result::Result<(), Vec<Violation>> {
        self.cfg.controller = table.apply(&self.cfg.controller)?;
        Ok(())
    }

    /// Run one control period. Returns `None` once the run is over.
    pub fn tick(&mut self) -> Option<FlightLogRecord> {
        if self.finished() {
            return None;
        }
        let t = self.t();
        let t_ms = (t * 1000.0).round() as u64;
        let wind_model = &self.scenario.wind;

        // Flight unit samples and transmits.
        let wind = wind_model.wind_at(self.kite.z, t);
        let reading = self.sensors.sample(t, &self.kite, wind);
        let frame = TelemetryFrame::new(
            self.down_seq,
            t_ms as u32,
            Payload::Telemetry(TelemetryPayload::from_reading(&reading)),
        );
        self.down_seq = self.down_seq.wrapping_add(1);
        self.downlink.send(t_ms, encode_frame(&frame).expect("telemetry payload fits"));

        // Ground unit receives and decides.
        for f in self.ground_rx.push(&self.downlink.deliver(t_ms)) {
            if let Payload::Telemetry(p) = f.payload {
                self.last_reading = Some(p.to_reading(f64::from(f.timestamp_ms) / 1000.0));
                self.last_rx_seq = f.seq;
            }
        }
        let input = TickInput {
            t,
            line_out: self.winch.line_out,
            reading: self.last_reading.as_ref(),
        };
        let (duty, next) = controller_tick(&self.controller, input, &self.cfg.controller);
        self.controller = next;

        let cmd = TelemetryFrame::new(
            self.up_seq,
            t_ms as u32,
            Payload::Command(CommandPayload::new(next.mode, duty)),
        );
        self.up_seq = self.up_seq.wrapping_add(1);
        self.uplink.send(t_ms, encode_frame(&cmd).expect("command payload fits"));
        for f in self.winch_rx.push(&self.uplink.deliver(t_ms)) {
            if let Payload::Command(c) = f.payload {
                self.winch_duty = c.duty_pct();
            }
        }

        let record = FlightLogRecord {
            t_s: t,
            duty_pct: duty,
            wind_mps: self.last_reading.map_or(0.0, |r| r.wind_speed()),
            line_m: self.winch.line_out,
            alt_m: self.kite.z,
            tension_n: self.kite.tension,
            mode: next.mode,
            seq: self.last_rx_seq,
        };
        self.log.records.push(record);

        if self.tick < self.n_ticks {
            let dt = self.plant.dt();
            for i in 0..self.steps_per_tick {
                self.winch.duty = self.winch_duty;
                let w = wind_model.wind_at(self.kite.z, t + i as f64 * dt);
                (self.kite, self.winch) = self.plant.step(&self.kite, &self.winch, w);
            }
        }
        self.tick += 1;
        Some(record)
    }

    pub fn snapshot(&self) -> Snapshot {
        let last = self.log.records.last();
        Snapshot {
            tick: self.tick,
            t_s: last.map_or(0.0, |r| r.t_s),
            mode: self.controller.mode,
            duty_pct: self.controller.duty,
            wind_mps: last.map_or(0.0, |r| r.wind_mps),
            line_m: last.map_or(self.winch.line_out, |r| r.line_m),
            alt_m: last.map_or(self.kite.z, |r| r.alt_m),
            tension_n: last.map_or(self.kite.tension, |r| r.tension_n),
            seq: self.last_rx_seq,
            stage_index: self.controller.stage_index,
            telemetry_lost: self.controller.telemetry_lost,
            kite: self.kite,
            winch: self.winch,
            finished: self.finished(),
        }
    }
}

/// Run a whole scenario as fast as possible.
pub fn run_scenario(cfg: &Config, scenario: &Scenario, duration_s: f64, opts: &RunOptions) -> Result<FlightLog> {
    let mut s = Session::new(cfg, scenario, duration_s, opts)?;
    while s.tick().is_some() {}
    Ok(s.into_log())
}
