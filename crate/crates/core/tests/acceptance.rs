//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use kiteflight::config::{Config, ControllerConfig};
use kiteflight::controller::{takeoff_duty, wind_hold_update, ControllerMode, ControllerState};
use kiteflight::physics::calibrate_lift_coeff;
use kiteflight::scenarios::{Scenario, StartSpec, LULL_END_S, LULL_START_S, WIND_ONSET_S};
use kiteflight::station::{analyze_lag, run_scenario, FlightLog, RunOptions};
use kiteflight::telemetry::{
    crc16_ccitt_false, decode_frame, encode_frame, AckPayload, CommandPayload, FrameParser, Payload, TelemetryFrame,
    TelemetryPayload,
};
use kiteflight::tuning::{optimize, TuneOptions};
use kiteflight::wind::WindScenario;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn takeoff_exactness() -> Outcome {
    let cfg = ControllerConfig::default();
    let s0 = ControllerState::in_mode(ControllerMode::Takeoff, 0.0);
    let far = cfg.l_start;
    let mut failures = Vec::new();
    let mut pin = |name: &str, got: f64, want: f64| {
        if (got - want).abs() > 1e-12 {
            failures.push(format!("{name}: {got} != {want}"));
        }
    };
    pin("t=0", takeoff_duty(0.0, far, &cfg, &s0).0, 0.0);
    pin("t=T_u/2", takeoff_duty(cfg.t_u / 2.0, far, &cfg, &s0).0, cfg.d_max / 2.0);
    pin("t=T_u", takeoff_duty(cfg.t_u, far, &cfg, &s0).0, cfg.d_max);
    // Just past the ramp, the hold branch gives the same value.
    let (d, held) = takeoff_duty(cfg.t_u + 1e-9, far, &cfg, &s0);
    pin("t=T_u+ hold", d, cfg.d_max);
    pin("hold at t=20", takeoff_duty(20.0, cfg.l_start - cfg.pull_in + 0.01, &cfg, &held).0, cfg.d_max);
    let t_c = 25.0;
    let (d, after) = takeoff_duty(t_c, cfg.l_start - cfg.pull_in, &cfg, &held);
    pin("t=T_c", d, cfg.d_max);
    pin("decay midpoint", takeoff_duty(t_c + cfg.t_d / 2.0, 40.0, &cfg, &after).0, cfg.d_max / 2.0);
    pin("t-T_c=T_d", takeoff_duty(t_c + cfg.t_d, 40.0, &cfg, &after).0, 0.0);
    pin("t-T_c>T_d", takeoff_duty(t_c + 10.0 * cfg.t_d, 40.0, &cfg, &after).0, 0.0);
    check(failures.is_empty(), if failures.is_empty() { "9 pinned values within 1e-12".into() } else { failures.join("; ") })
}

fn wind_hold_exactness() -> Outcome {
    let cfg = ControllerConfig::default();
    let mut failures = Vec::new();
    for i in 0..cfg.n_stages() {
        let lo = cfg.thresholds[i];
        let w = if cfg.thresholds[i + 1].is_finite() { (lo + cfg.thresholds[i + 1]) / 2.0 } else { lo + 5.0 };
        let d = cfg.deltas[i];
        let mid = 50.0;
        if wind_hold_update(mid, w, &cfg) != mid + d {
            failures.push(format!("stage {} arithmetic", i + 1));
        }
        // Clamp cases: push past each bound from just inside it.
        let (lo_start, hi_start) = (0.0_f64.max(-d / 2.0), cfg.d_max.min(cfg.d_max - d / 2.0));
        let lo_case = wind_hold_update(lo_start.min(1.0), w, &cfg);
        let lo_want = (lo_start.min(1.0) + d).clamp(0.0, cfg.d_max);
        let hi_case = wind_hold_update(hi_start.max(cfg.d_max - 1.0), w, &cfg);
        let hi_want = (hi_start.max(cfg.d_max - 1.0) + d).clamp(0.0, cfg.d_max);
        if lo_case != lo_want || hi_case != hi_want {
            failures.push(format!("stage {} clamp", i + 1));
        }
        if d < 0.0 && wind_hold_update(0.0, w, &cfg) != 0.0 {
            failures.push(format!("stage {} lower clamp", i + 1));
        }
        if d > 0.0 && wind_hold_update(cfg.d_max, w, &cfg) != cfg.d_max {
            failures.push(format!("stage {} upper clamp", i + 1));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut out_of_range = 0u64;
    for _ in 0..100_000 {
        let mut duty = rng.random_range(0.0..=cfg.d_max);
        for _ in 0..20 {
            duty = wind_hold_update(duty, rng.random_range(0.0..12.0), &cfg);
            if !(0.0..=cfg.d_max).contains(&duty) {
                out_of_range += 1;
            }
        }
    }
    if out_of_range > 0 {
        failures.push(format!("{out_of_range} random updates left [0, d_max]"));
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            "7 stages exact, 10^5 random streams stayed in [0, d_max]".into()
        } else {
            failures.join("; ")
        },
    )
}

fn fixed_line(wind: f64) -> Scenario {
    Scenario {
        name: format!("fixed-{wind}"),
        wind: WindScenario::uniform(wind),
        start: StartSpec {
            mode: ControllerMode::Idle,
            line_m: 100.0,
            elevation_deg: 30.0,
            lock_line: true,
        },
        duration_s: 120.0,
    }
}

fn sustain_bracket() -> Outcome {
    let mut cfg = Config::default();
    let cl = calibrate_lift_coeff(&cfg.physics, 2.5);
    cfg.physics.drag_coeff *= cl / cfg.physics.lift_coeff;
    cfg.physics.lift_coeff = cl;
    let run = |w: f64| run_scenario(&cfg, &fixed_line(w), 120.0, &RunOptions::default()).expect("valid run");
    let high = run(2.6);
    let low = run(2.3);
    let min_high = high.records.iter().map(|r| r.alt_m).fold(f64::INFINITY, f64::min);
    let end_low = low.records.last().map_or(f64::NAN, |r| r.alt_m);
    check(
        min_high > 0.5 && end_low <= 0.01,
        format!("2.6 m/s min altitude {min_high:.2} m over 120 s; 2.3 m/s final altitude {end_low:.3} m"),
    )
}

fn preset_log(name: &str) -> FlightLog {
    let s = Scenario::preset(name).expect("preset");
    run_scenario(&Config::default(), &s, s.duration_s, &RunOptions::default()).expect("valid run")
}

fn takeoff_calm() -> Outcome {
    let log = preset_log("takeoff-calm");
    let (peak_i, peak) = log
        .records
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |b, (i, r)| if r.alt_m > b.1 { (i, r.alt_m) } else { b });
    let min_line = log.records.iter().map(|r| r.line_m).fold(f64::INFINITY, f64::min);
    // Winding stops when the takeoff duty has decayed to zero.
    let stop = log
        .records
        .iter()
        .position(|r| r.t_s > 3.0 && r.duty_pct == 0.0 || r.mode != ControllerMode::Takeoff)
        .unwrap_or(log.len() - 1);
    let end = log.records.last().map_or(f64::NAN, |r| r.alt_m);
    let decays = stop < log.len() - 1 && end < peak - 1.0 && log.records[peak_i].t_s <= log.records[stop].t_s + 5.0;
    check(
        (3.0..=15.0).contains(&peak) && decays && min_line <= 50.0,
        format!(
            "peak {peak:.2} m at t={:.1} s (band [3, 15]); line wound to {min_line:.1} m; altitude {end:.2} m at t={:.0} s",
            log.records[peak_i].t_s,
            log.records.last().map_or(0.0, |r| r.t_s)
        ),
    )
}

fn wind_step_lag() -> Outcome {
    let log = preset_log("wind-step");
    match analyze_lag(&log) {
        Ok(lag) => check((1.0..=10.0).contains(&lag), format!("lag {lag:.1} s (band [1, 10])")),
        Err(e) => check(false, e.to_string()),
    }
}

fn flight_shape() -> Outcome {
    let log = preset_log("flight-6min");
    let at = |t: f64| {
        log.records
            .iter()
            .min_by(|a, b| (a.t_s - t).abs().total_cmp(&(b.t_s - t).abs()))
            .expect("records")
    };
    let onset_alt = at(WIND_ONSET_S).alt_m;
    let gain = log
        .records
        .iter()
        .filter(|r| r.t_s >= WIND_ONSET_S && r.t_s <= WIND_ONSET_S + 90.0)
        .map(|r| r.alt_m - onset_alt)
        .fold(f64::MIN, f64::max);
    let lull_start_duty = at(LULL_START_S).duty_pct;
    let lull_max_duty = log
        .records
        .iter()
        .filter(|r| r.t_s >= LULL_START_S && r.t_s <= LULL_END_S)
        .map(|r| r.duty_pct)
        .fold(f64::MIN, f64::max);
    let lull_min_alt = log
        .records
        .iter()
        .filter(|r| r.t_s >= LULL_START_S)
        .map(|r| r.alt_m)
        .fold(f64::INFINITY, f64::min);
    let end_alt = at(360.0).alt_m;
    check(
        gain >= 10.0 && lull_max_duty > lull_start_duty && end_alt > lull_min_alt,
        format!(
            "gain {gain:.1} m within 90 s of onset (need >= 10); lull duty {lull_start_duty:.1} -> {lull_max_duty:.1} %; altitude {end_alt:.1} m at 360 s vs lull minimum {lull_min_alt:.1} m"
        ),
    )
}

fn random_frame(rng: &mut ChaCha8Rng) -> TelemetryFrame {
    let payload = match rng.random_range(0..4) {
        0 => Payload::Telemetry(TelemetryPayload {
            wind_x: rng.random(),
            wind_y: rng.random(),
            pressure: rng.random(),
            baro_alt: rng.random(),
            lat: rng.random(),
            lon: rng.random(),
            gps_alt: rng.random(),
            accel: [rng.random(), rng.random(), rng.random()],
            gyro: [rng.random(), rng.random(), rng.random()],
        }),
        1 => Payload::Command(CommandPayload {
            mode: ControllerMode::ALL[rng.random_range(0..5)],
            duty: rng.random(),
        }),
        2 => Payload::Ack(AckPayload { acked_seq: Some(rng.random()) }),
        _ => Payload::Ack(AckPayload { acked_seq: None }),
    };
    TelemetryFrame::new(rng.random(), rng.random(), payload)
}

fn golden_frames() -> Vec<Vec<u8>> {
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden_frames.hex"))
        .expect("golden file");
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(|h| u8::from_str_radix(h, 16).expect("hex")).collect())
        .collect()
}

fn golden_expected() -> Vec<TelemetryFrame> {
    vec![
        TelemetryFrame::new(
            0,
            0,
            Payload::Telemetry(TelemetryPayload {
                wind_x: 250,
                wind_y: 0,
                pressure: 101_325,
                baro_alt: 0,
                lat: 356_812_360,
                lon: 1_397_671_250,
                gps_alt: 1200,
                accel: [0, 0, 1000],
                gyro: [0, 0, 0],
            }),
        ),
        TelemetryFrame::new(
            1,
            200,
            Payload::Telemetry(TelemetryPayload {
                wind_x: 300,
                wind_y: 400,
                pressure: 100_725,
                baro_alt: 5012,
                lat: -338_688_000,
                lon: 1_512_093_000,
                gps_alt: 5100,
                accel: [-12, 35, 981],
                gyro: [-150, 25, 3600],
            }),
        ),
        TelemetryFrame::new(7, 1400, Payload::Command(CommandPayload { mode: ControllerMode::WindHold, duty: 1250 })),
        TelemetryFrame::new(
            65_535,
            u32::MAX,
            Payload::Command(CommandPayload { mode: ControllerMode::Manual, duty: 4000 }),
        ),
        TelemetryFrame::new(2, 400, Payload::Ack(AckPayload { acked_seq: None })),
    ]
}

fn telemetry() -> Outcome {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut stream = Vec::new();
    let mut frames = Vec::new();
    for _ in 0..10_000 {
        let f = random_frame(&mut rng);
        let bytes = encode_frame(&f).expect("encodes");
        if decode_frame(&bytes).ok() != Some(f) {
            failures.push(format!("round trip failed for {f:?}"));
            break;
        }
        stream.extend(bytes);
        frames.push(f);
    }
    let mut parser = FrameParser::new();
    let parsed: Vec<_> = stream.chunks(97).flat_map(|c| parser.push(c)).collect();
    if parsed != frames {
        failures.push("chunked stream did not reproduce the frames".into());
    }

    let golden = golden_frames();
    let canonical = &golden[0];
    let mut undetected = 0;
    for bit in 0..canonical.len() * 8 {
        let mut b = canonical.clone();
        b[bit / 8] ^= 1 << (bit % 8);
        if decode_frame(&b).is_ok() {
            undetected += 1;
        }
    }
    if undetected > 0 {
        failures.push(format!("{undetected} single-bit flips undetected"));
    }
    let decoded: Vec<_> = golden.iter().map(|b| decode_frame(b).ok()).collect();
    let expected: Vec<_> = golden_expected().into_iter().map(Some).collect();
    if decoded != expected {
        failures.push("golden frames decode to unexpected values".into());
    }
    let check_value = crc16_ccitt_false(b"123456789");
    if check_value != 0x29B1 {
        failures.push(format!("crc check value {check_value:#06X}"));
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "10^4 round trips; {} bit flips detected; {} golden frames; check value {check_value:#06X}",
                canonical.len() * 8,
                golden.len()
            )
        } else {
            failures.join("; ")
        },
    )
}

fn determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_kiteflight");
    let dir = tempfile::tempdir().expect("tempdir");
    let sim = |out: &Path| {
        Command::new(exe)
            .args(["sim", "--scenario", "flight-6min", "--duration", "120", "--seed", "7", "--loss", "0.05", "--out"])
            .arg(out)
            .output()
            .expect("run sim")
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let (ra, rb) = (sim(&a), sim(&b));
    if !(ra.status.success() && rb.status.success()) {
        return check(false, format!("sim failed: {}", String::from_utf8_lossy(&ra.stderr)));
    }
    let la = std::fs::read(a.join("flight_log.csv")).expect("log a");
    let lb = std::fs::read(b.join("flight_log.csv")).expect("log b");
    let rep = Command::new(exe)
        .args(["replay", "--manifest"])
        .arg(a.join("manifest.json"))
        .output()
        .expect("run replay");
    let replay_text = String::from_utf8_lossy(&rep.stdout).trim().to_string();
    check(
        la == lb && rep.status.success() && replay_text.ends_with("identical"),
        format!("two seeded runs {} ({} bytes); replay: {replay_text}", if la == lb { "byte-identical" } else { "DIFFER" }, la.len()),
    )
}

fn tuning() -> Outcome {
    let mut broken = Config::default();
    broken.controller.deltas = vec![-8.0; broken.controller.deltas.len()];
    let suite = vec![Scenario::preset("gusty").expect("preset")];
    let opts = TuneOptions::default();
    match optimize(&broken, &suite, &opts) {
        Ok(r) => check(
            r.best_objective > r.initial_objective && r.history.len() <= opts.budget,
            format!(
                "objective {:.4} -> {:.4} in {} evaluations (budget {})",
                r.initial_objective,
                r.best_objective,
                r.history.len(),
                opts.budget
            ),
        ),
        Err(e) => check(false, e.to_string()),
    }
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("takeoff law exactness", Duration::from_secs(1), takeoff_exactness),
        ("wind-hold law exactness", Duration::from_secs(5), wind_hold_exactness),
        ("sustain-wind bracket", Duration::from_secs(10), sustain_bracket),
        ("calm takeoff peak and decay", Duration::from_secs(10), takeoff_calm),
        ("wind/altitude lag", Duration::from_secs(10), wind_step_lag),
        ("six-minute flight shape", Duration::from_secs(30), flight_shape),
        ("telemetry framing", Duration::from_secs(5), telemetry),
        ("determinism and replay", Duration::from_secs(60), determinism),
        ("tuning improves broken table", Duration::from_secs(120), tuning),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, budget, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let took = start.elapsed();
        let pass = o.pass && took < budget;
        if !pass {
            failed += 1;
        }
        println!(
            "{} {name}: {} [{:.2} s, limit {} s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
