use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controller::ControllerMode;
use crate::error::{Error, Result};

pub const LOG_HEADER: &str = "t_s,duty_pct,wind_mps,line_m,alt_m,tension_N,mode,seq";

/// One row per control tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlightLogRecord {
    pub t_s: f64,
    pub duty_pct: f64,
    /// Wind speed measured on the flight unit, as last received by the ground.
    pub wind_mps: f64,
    pub line_m: f64,
    pub alt_m: f64,
    #[serde(rename = "tension_N")]
    pub tension_n: f64,
    pub mode: ControllerMode,
    /// Sequence number of the last telemetry frame received.
    pub seq: u16,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FlightLog {
    pub records: Vec<FlightLogRecord>,
}

impl FlightLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn max_altitude(&self) -> f64 {
        self.records.iter().map(|r| r.alt_m).fold(0.0, f64::max)
    }

    /// Total line moved in either direction, m.
    pub fn line_travel(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| (w[1].line_m - w[0].line_m).abs())
            .sum()
    }

    /// Sample spacing, or `None` with fewer than two records.
    pub fn period(&self) -> Option<f64> {
        match self.records.as_slice() {
            [a, b, ..] => Some(b.t_s - a.t_s),
            _ => None,
        }
    }

    /// Shortest decimal text that parses back to the same bits.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(LOG_HEADER);
        out.push('\n');
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.t_s, r.duty_pct, r.wind_mps, r.line_m, r.alt_m, r.tension_n, r.mode, r.seq
            )
            .unwrap();
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<FlightLog> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end() == LOG_HEADER => {}
            _ => {
                return Err(Error::LogFormat {
                    line: 1,
                    message: format!("expected header `{LOG_HEADER}`"),
                })
            }
        }
        let mut records = Vec::new();
        for (i, line) in lines {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            records.push(parse_row(line).map_err(|message| Error::LogFormat { line: line_no, message })?);
        }
        Ok(FlightLog { records })
    }
}

fn parse_row(line: &str) -> std::result::Result<FlightLogRecord, String> {
    let fields: Vec<&str> = line.trim_end().split(',').collect();
    if fields.len() != 8 {
        return Err(format!("expected 8 fields, found {}", fields.len()));
    }
    let num = |i: usize, name: &str| {
        fields[i]
            .parse::<f64>()
            .map_err(|e| format!("bad {name} `{}`: {e}", fields[i]))
    };
    Ok(FlightLogRecord {
        t_s: num(0, "t_s")?,
        duty_pct: num(1, "duty_pct")?,
        wind_mps: num(2, "wind_mps")?,
        line_m: num(3, "line_m")?,
        alt_m: num(4, "alt_m")?,
        tension_n: num(5, "tension_N")?,
        mode: fields[6].parse()?,
        seq: fields[7]
            .parse()
            .map_err(|e| format!("bad seq `{}`: {e}", fields[7]))?,
    })
}

pub fn write_log(path: impl AsRef<Path>, log: &FlightLog) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, log.to_csv_string()).map_err(|e| Error::io(path, e))
}

pub fn read_log(path: impl AsRef<Path>) -> Result<FlightLog> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    FlightLog::from_csv_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64) -> FlightLogRecord {
        FlightLogRecord {
            t_s: t,
            duty_pct: 1.0 / 3.0,
            wind_mps: std::f64::consts::E,
            line_m: 100.0,
            alt_m: 1e-300,
            tension_n: 12.5,
            mode: ControllerMode::ReleaseToStation,
            seq: 65535,
        }
    }

    #[test]
    fn empty_log_is_header_only() {
        assert_eq!(FlightLog::default().to_csv_string(), format!("{LOG_HEADER}\n"));
        assert!(FlightLog::from_csv_str(&format!("{LOG_HEADER}\n")).unwrap().is_empty());
    }

    #[test]
    fn round_trip() {
        let log = FlightLog {
            records: vec![rec(0.0), rec(0.2), rec(0.4)],
        };
        assert_eq!(FlightLog::from_csv_str(&log.to_csv_string()).unwrap(), log);
    }

    #[test]
    fn truncated_row_names_line() {
        let log = FlightLog {
            records: vec![rec(0.0), rec(0.2)],
        };
        let text = log.to_csv_string();
        let cut = text.trim_end().rsplit_once(',').unwrap().0.to_string();
        match FlightLog::from_csv_str(&cut) {
            Err(Error::LogFormat { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_header() {
        assert!(matches!(
            FlightLog::from_csv_str("t,duty\n"),
            Err(Error::LogFormat { line: 1, .. })
        ));
    }
}
