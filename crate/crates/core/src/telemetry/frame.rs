use serde::{Deserialize, Serialize};

use super::crc16::crc16_ccitt_false;
use crate::controller::ControllerMode;
use crate::error::{Error, Result};
use crate::sensors::SensorReading;

pub const SYNC: [u8; 2] = [0xA5, 0x5A];
pub const PROTOCOL_VERSION: u8 = 1;
/// Sync through length byte.
pub const HEADER_LEN: usize = 11;
/// Header plus CRC.
pub const FRAME_OVERHEAD: usize = HEADER_LEN + 2;

const TELEMETRY_LEN: usize = 36;
const COMMAND_LEN: usize = 3;
/// One milli-g in m/s².
const MILLI_G: f64 = 9.806_65e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FrameType {
    Telemetry = 1,
    Command = 2,
    Ack = 3,
}

impl FrameType {
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(FrameType::Telemetry),
            2 => Some(FrameType::Command),
            3 => Some(FrameType::Ack),
            _ => None,
        }
    }
}

/// Quantized sensor payload. Field units are the wire units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TelemetryPayload {
    /// cm/s
    pub wind_x: u16,
    /// cm/s
    pub wind_y: u16,
    /// Pa
    pub pressure: u32,
    /// cm
    pub baro_alt: i32,
    /// degrees × 1e7
    pub lat: i32,
    /// degrees × 1e7
    pub lon: i32,
    /// cm
    pub gps_alt: i32,
    /// milli-g
    pub accel: [i16; 3],
    /// 0.1 deg/s
    pub gyro: [i16; 3],
}

fn quantize_u16(v: f64, scale: f64) -> u16 {
    (v * scale).round().clamp(0.0, f64::from(u16::MAX)) as u16
}

fn quantize_i16(v: f64, scale: f64) -> i16 {
    (v * scale).round().clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16
}

fn quantize_i32(v: f64, scale: f64) -> i32 {
    (v * scale).round().clamp(f64::from(i32::MIN), f64::from(i32::MAX)) as i32
}

impl TelemetryPayload {
    pub fn from_reading(r: &SensorReading) -> Self {
        Self {
            wind_x: quantize_u16(r.wind_x, 100.0),
            wind_y: quantize_u16(r.wind_y, 100.0),
            pressure: r.pressure.round().clamp(0.0, f64::from(u32::MAX)) as u32,
            baro_alt: quantize_i32(r.baro_alt, 100.0),
            lat: quantize_i32(r.lat, 1e7),
            lon: quantize_i32(r.lon, 1e7),
            gps_alt: quantize_i32(r.gps_alt, 100.0),
            accel: r.accel.map(|a| quantize_i16(a, 1.0 / MILLI_G)),
            gyro: r.gyro.map(|g| quantize_i16(g, 10.0)),
        }
    }

    /// Back to SI units; `t` comes from the frame timestamp.
    pub fn to_reading(&self, t: f64) -> SensorReading {
        SensorReading {
            t,
            wind_x: f64::from(self.wind_x) / 100.0,
            wind_y: f64::from(self.wind_y) / 100.0,
            pressure: f64::from(self.pressure),
            baro_alt: f64::from(self.baro_alt) / 100.0,
            lat: f64::from(self.lat) / 1e7,
            lon: f64::from(self.lon) / 1e7,
            gps_alt: f64::from(self.gps_alt) / 100.0,
            accel: self.accel.map(|a| f64::from(a) * MILLI_G),
            gyro: self.gyro.map(|g| f64::from(g) / 10.0),
        }
    }

    fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.wind_x.to_le_bytes());
        out.extend_from_slice(&self.wind_y.to_le_bytes());
        out.extend_from_slice(&self.pressure.to_le_bytes());
        out.extend_from_slice(&self.baro_alt.to_le_bytes());
        out.extend_from_slice(&self.lat.to_le_bytes());
        out.extend_from_slice(&self.lon.to_le_bytes());
        out.extend_from_slice(&self.gps_alt.to_le_bytes());
        for a in self.accel {
            out.extend_from_slice(&a.to_le_bytes());
        }
        for g in self.gyro {
            out.extend_from_slice(&g.to_le_bytes());
        }
    }

    fn read(b: &[u8]) -> Option<Self> {
        if b.len() != TELEMETRY_LEN {
            return None;
        }
        let u16_at = |i: usize| u16::from_le_bytes([b[i], b[i + 1]]);
        let i16_at = |i: usize| i16::from_le_bytes([b[i], b[i + 1]]);
        let u32_at = |i: usize| u32::from_le_bytes([b[i], b[i + 1], b[i + 2], b[i + 3]]);
        let i32_at = |i: usize| i32::from_le_bytes([b[i], b[i + 1], b[i + 2], b[i + 3]]);
        Some(Self {
            wind_x: u16_at(0),
            wind_y: u16_at(2),
            pressure: u32_at(4),
            baro_alt: i32_at(8),
            lat: i32_at(12),
            lon: i32_at(16),
            gps_alt: i32_at(20),
            accel: [i16_at(24), i16_at(26), i16_at(28)],
            gyro: [i16_at(30), i16_at(32), i16_at(34)],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandPayload {
    pub mode: ControllerMode,
    /// centi-percent
    pub duty: i16,
}

impl CommandPayload {
    pub fn new(mode: ControllerMode, duty_pct: f64) -> Self {
        Self {
            mode,
            duty: quantize_i16(duty_pct, 100.0),
        }
    }

    pub fn duty_pct(&self) -> f64 {
        f64::from(self.duty) / 100.0
    }
}

/// Acknowledgement, optionally naming the sequence number it acknowledges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AckPayload {
    pub acked_seq: Option<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Payload {
    Telemetry(TelemetryPayload),
    Command(CommandPayload),
    Ack(AckPayload),
}

impl Payload {
    pub fn frame_type(&self) -> FrameType {
        match self {
            Payload::Telemetry(_) => FrameType::Telemetry,
            Payload::Command(_) => FrameType::Command,
            Payload::Ack(_) => FrameType::Ack,
        }
    }

    fn to_bytes(self) -> Vec<u8> {
        let mut out = Vec::with_capacity(TELEMETRY_LEN);
        match self {
            Payload::Telemetry(p) => p.write(&mut out),
            Payload::Command(c) => {
                out.push(c.mode.code());
                out.extend_from_slice(&c.duty.to_le_bytes());
            }
            Payload::Ack(a) => {
                if let Some(seq) = a.acked_seq {
                    out.extend_from_slice(&seq.to_le_bytes());
                }
            }
        }
        out
    }

    fn from_bytes(kind: FrameType, b: &[u8]) -> Option<Self> {
        match kind {
            FrameType::Telemetry => TelemetryPayload::read(b).map(Payload::Telemetry),
            FrameType::Command => {
                if b.len() != COMMAND_LEN {
                    return None;
                }
                let mode = ControllerMode::from_code(b[0])?;
                Some(Payload::Command(CommandPayload {
                    mode,
                    duty: i16::from_le_bytes([b[1], b[2]]),
                }))
            }
            FrameType::Ack => match b.len() {
                0 => Some(Payload::Ack(AckPayload { acked_seq: None })),
                2 => Some(Payload::Ack(AckPayload {
                    acked_seq: Some(u16::from_le_bytes([b[0], b[1]])),
                })),
                _ => None,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    pub version: u8,
    pub seq: u16,
    pub timestamp_ms: u32,
    pub payload: Payload,
}

impl TelemetryFrame {
    pub fn new(seq: u16, timestamp_ms: u32, payload: Payload) -> Self {
        Self {
            version: PROTOCOL_VERSION,
            seq,
            timestamp_ms,
            payload,
        }
    }

    pub fn frame_type(&self) -> FrameType {
        self.payload.frame_type()
    }
}

/// Encode a frame from raw parts. Fails if the payload exceeds 255 bytes.
pub fn encode_raw(version: u8, frame_type: u8, seq: u16, timestamp_ms: u32, payload: &[u8]) -> Result<Vec<u8>> {
    let len = u8::try_from(payload.len())
        .map_err(|_| Error::Frame(format!("payload of {} bytes exceeds 255", payload.len())))?;
    let mut out = Vec::with_capacity(FRAME_OVERHEAD + payload.len());
    out.extend_from_slice(&SYNC);
    out.push(version);
    out.push(frame_type);
    out.extend_from_slice(&seq.to_le_bytes());
    out.extend_from_slice(&timestamp_ms.to_le_bytes());
    out.push(len);
    out.extend_from_slice(payload);
    let crc = crc16_ccitt_false(&out[2..]);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

pub fn encode_frame(frame: &TelemetryFrame) -> Result<Vec<u8>> {
    encode_raw(
        frame.version,
        frame.frame_type() as u8,
        frame.seq,
        frame.timestamp_ms,
        &frame.payload.to_bytes(),
    )
}

/// Decode exactly one complete frame.
pub fn decode_frame(bytes: &[u8]) -> Result<TelemetryFrame> {
    if bytes.len() < FRAME_OVERHEAD {
        return Err(Error::Frame(format!("{} bytes is shorter than a frame", bytes.len())));
    }
    if bytes[..2] != SYNC {
        return Err(Error::Frame("missing sync".into()));
    }
    let len = usize::from(bytes[10]);
    if bytes.len() != FRAME_OVERHEAD + len {
        return Err(Error::Frame(format!(
            "length byte says {len} payload bytes, frame has {}",
            bytes.len() - FRAME_OVERHEAD
        )));
    }
    let body_end = HEADER_LEN + len;
    let expected = u16::from_le_bytes([bytes[body_end], bytes[body_end + 1]]);
    let actual = crc16_ccitt_false(&bytes[2..body_end]);
    if expected != actual {
        return Err(Error::Frame(format!("crc mismatch: {actual:#06x} != {expected:#06x}")));
    }
    if bytes[2] != PROTOCOL_VERSION {
        return Err(Error::Frame(format!("unsupported version {}", bytes[2])));
    }
    let kind = FrameType::from_code(bytes[3])
        .ok_or_else(|| Error::Frame(format!("unknown frame type {}", bytes[3])))?;
    let payload = Payload::from_bytes(kind, &bytes[HEADER_LEN..body_end])
        .ok_or_else(|| Error::Frame(format!("malformed {kind:?} payload")))?;
    Ok(TelemetryFrame {
        version: bytes[2],
        seq: u16::from_le_bytes([bytes[4], bytes[5]]),
        timestamp_ms: u32::from_le_bytes([bytes[6], bytes[7], bytes[8], bytes[9]]),
        payload,
    })
}
