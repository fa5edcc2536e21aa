use serde::Serialize;

use super::frame::{decode_frame, TelemetryFrame, FRAME_OVERHEAD, HEADER_LEN, SYNC};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ParserDiagnostics {
    pub frames: u64,
    pub dropped_bytes: u64,
    pub bad_frames: u64,
}

/// Incremental byte-stream decoder. Resynchronises on the sync word after
/// garbage or a corrupted frame.
#[derive(Debug, Clone, Default)]
pub struct FrameParser {
    buf: Vec<u8>,
    diag: ParserDiagnostics,
}

impl FrameParser {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn diagnostics(&self) -> ParserDiagnostics {
        self.diag
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    /// Feed bytes; returns every complete valid frame now available.
    pub fn push(&mut self, bytes: &[u8]) -> Vec<TelemetryFrame> {
        self.buf.extend_from_slice(bytes);
        let mut out = Vec::new();
        let mut start = 0;
        loop {
            let rest = &self.buf[start..];
            match rest.windows(2).position(|w| w == SYNC) {
                Some(p) => {
                    self.diag.dropped_bytes += p as u64;
                    start += p;
                }
                None => {
                    // Keep a trailing first sync byte; it may start a frame.
                    let keep = usize::from(rest.last() == Some(&SYNC[0]));
                    self.diag.dropped_bytes += (rest.len() - keep) as u64;
                    start = self.buf.len() - keep;
                    break;
                }
            }
            let rest = &self.buf[start..];
            if rest.len() < HEADER_LEN {
                break;
            }
            let total = FRAME_OVERHEAD + usize::from(rest[HEADER_LEN - 1]);
            if rest.len() < total {
                break;
            }
            match decode_frame(&rest[..total]) {
                Ok(frame) => {
                    self.diag.frames += 1;
                    out.push(frame);
                    start += total;
                }
                Err(_) => {
                    self.diag.bad_frames += 1;
                    self.diag.dropped_bytes += 1;
                    start += 1;
                }
            }
        }
        self.buf.drain(..start);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::ControllerMode;
    use crate::telemetry::frame::{encode_frame, CommandPayload, Payload};

    fn frame(seq: u16) -> (TelemetryFrame, Vec<u8>) {
        let f = TelemetryFrame::new(
            seq,
            u32::from(seq) * 200,
            Payload::Command(CommandPayload::new(ControllerMode::WindHold, 12.5)),
        );
        let b = encode_frame(&f).unwrap();
        (f, b)
    }

    #[test]
    fn byte_at_a_time() {
        let mut p = FrameParser::new();
        let mut got = Vec::new();
        let mut expected = Vec::new();
        for seq in 0..5 {
            let (f, b) = frame(seq);
            expected.push(f);
            for byte in b {
                got.extend(p.push(&[byte]));
            }
        }
        assert_eq!(got, expected);
        assert_eq!(p.diagnostics().dropped_bytes, 0);
        assert_eq!(p.buffered(), 0);
    }

    #[test]
    fn skips_garbage_and_corruption() {
        let mut p = FrameParser::new();
        let (f0, b0) = frame(0);
        let (_, mut b1) = frame(1);
        let (f2, b2) = frame(2);
        b1[12] ^= 0x40;
        let mut stream = vec![0x00, 0xA5, 0x13, 0x5A];
        stream.extend(&b0);
        stream.extend(&b1);
        stream.extend(&b2);
        let got = p.push(&stream);
        assert_eq!(got, vec![f0, f2]);
        assert_eq!(p.diagnostics().bad_frames, 1);
        assert_eq!(p.diagnostics().dropped_bytes, 4 + b1.len() as u64);
    }

    #[test]
    fn trailing_sync_byte_kept() {
        let mut p = FrameParser::new();
        let (f, b) = frame(3);
        assert!(p.push(&[0x11, 0x22, b[0]]).is_empty());
        assert_eq!(p.buffered(), 1);
        assert_eq!(p.push(&b[1..]), vec![f]);
        assert_eq!(p.diagnostics().dropped_bytes, 2);
    }
}
