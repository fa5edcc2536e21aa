use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kiteflight(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kiteflight")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn files_under(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn sim_writes_log_and_manifest_then_replays() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = kiteflight(&["sim", "--scenario", "steady-4mps", "--duration", "20", "--seed", "4", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("run "));
    assert!(text.contains("records 101"));
    assert_eq!(files_under(dir.path()), ["run"]);
    assert_eq!(files_under(&out), ["flight_log.csv", "manifest.json"]);

    let o = kiteflight(&["replay", "--manifest", s(&out.join("manifest.json"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).trim_end().ends_with("101 records, identical"));
}

#[test]
fn replay_detects_a_tampered_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert!(kiteflight(&["sim", "--scenario", "steady-4mps", "--duration", "10", "--out", s(&out)]).status.success());
    let log = out.join("flight_log.csv");
    let text = std::fs::read_to_string(&log).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.pop();
    std::fs::write(&log, lines.join("\n") + "\n").unwrap();
    let o = kiteflight(&["replay", "--manifest", s(&out.join("manifest.json"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("MISMATCH"));
}

#[test]
fn json_output_parses() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = kiteflight(&["--json", "sim", "--scenario", "lull", "--duration", "10", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["summary"]["records"], 51);
    assert!(v["run_id"].as_str().unwrap().len() >= 8);

    let o = kiteflight(&["--json", "analyze", "--log", s(&out.join("flight_log.csv"))]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["summary"]["records"], 51);
}

#[test]
fn analyze_recovers_a_known_lag() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("shifted.csv");
    let wind = |i: i64| 5.0 + (i as f64 * 0.07).sin() + 0.5 * (i as f64 * 0.23).sin() + 0.3 * (i as f64 * 0.011).cos();
    let mut text = String::from("t_s,duty_pct,wind_mps,line_m,alt_m,tension_N,mode,seq\n");
    for i in 0..600i64 {
        let alt = 10.0 + 4.0 * (wind(i - 20) - 5.0);
        text.push_str(&format!("{},10,{},100,{},20,WIND_HOLD,{}\n", i as f64 * 0.2, wind(i), alt, i));
    }
    std::fs::write(&log, text).unwrap();
    let kml = dir.path().join("trail.kml");
    let o = kiteflight(&["analyze", "--log", s(&log), "--lag", "--kml", s(&kml), "--lat", "-33.9", "--lon", "151.2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).lines().any(|l| l == "lag 4.0 s"), "{}", stdout(&o));
    assert!(std::fs::read_to_string(&kml).unwrap().contains("<coordinates>"));
}

#[test]
fn tune_writes_config_and_history() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tuned");
    let o = kiteflight(&["tune", "--budget", "6", "--scenario", "steady-4mps", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files_under(dir.path()), ["tuned"]);
    assert_eq!(files_under(&out), ["tune_history.csv", "tuned_config.json"]);
    let history = std::fs::read_to_string(out.join("tune_history.csv")).unwrap();
    assert!(history.lines().count() <= 7);

    let o = kiteflight(&["sim", "--config", s(&out.join("tuned_config.json")), "--duration", "2", "--out", s(&dir.path().join("r"))]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn exit_codes_separate_usage_validation_and_io() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");

    assert_eq!(kiteflight(&["sim", "--bogus"]).status.code(), Some(1));
    assert_eq!(kiteflight(&["sim"]).status.code(), Some(1));
    assert_eq!(kiteflight(&["--help"]).status.code(), Some(0));

    let mut cfg: Value = serde_json::from_str(&std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.json")).unwrap()).unwrap();
    cfg["windhold"]["deltas_pct"][0] = Value::from(-50.0);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, cfg.to_string()).unwrap();
    let o = kiteflight(&["sim", "--config", s(&bad), "--duration", "1", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());

    let o = kiteflight(&["--json", "sim", "--config", s(&dir.path().join("missing.json")), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["error"].is_string());

    assert_eq!(kiteflight(&["analyze", "--log", s(&dir.path().join("none.csv"))]).status.code(), Some(2));
    assert!(!out.exists());
}
