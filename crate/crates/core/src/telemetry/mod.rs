//! Framed wire protocol between the flight unit and the ground unit.
//!
//! ```text
//! offset  size  field
//! 0       2     sync 0xA5 0x5A
//! 2       1     version (1)
//! 3       1     frame type (1 TELEMETRY, 2 COMMAND, 3 ACK)
//! 4       2     sequence, u16 LE
//! 6       4     timestamp, ms, u32 LE
//! 10      1     payload length N (<= 255)
//! 11      N     payload
//! 11+N    2     CRC-16/CCITT-FALSE over bytes 2..11+N, u16 LE
//! ```
//!
//! Multi-byte fields are little-endian. The layout is a clean-room stand-in
//! for the radio link; see `docs/PROTOCOL.md` for payload layouts.

mod channel;
mod crc16;
mod frame;
mod parser;

pub use channel::LossyChannel;
pub use crc16::crc16_ccitt_false;
pub use frame::{
    decode_frame, encode_frame, encode_raw, AckPayload, CommandPayload, FrameType, Payload,
    TelemetryFrame, TelemetryPayload, FRAME_OVERHEAD, HEADER_LEN, PROTOCOL_VERSION, SYNC,
};
pub use parser::{FrameParser, ParserDiagnostics};
