//! Perception → control message: one header byte, three probability codes and
//! an XOR checksum.
//!
//! ```text
//! +------+------+--------+-------+-----------------------+
//! | 0xAA | left | center | right | left ^ center ^ right |
//! +------+------+--------+-------+-----------------------+
//! ```

use super::SectorProbsQ8;
use thiserror::Error;

pub const FRAME_HEADER: u8 = 0xAA;
pub const FRAME_LEN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("bad header byte {0:#04x}")]
    BadHeader(u8),
    #[error("checksum mismatch: expected {expected:#04x}, got {got:#04x}")]
    BadChecksum { expected: u8, got: u8 },
    #[error("short frame: {0} bytes")]
    ShortFrame(usize),
    #[error("frame too long: {0} bytes")]
    LongFrame(usize),
}

fn checksum(l: u8, c: u8, r: u8) -> u8 {
    l ^ c ^ r
}

pub fn encode_frame(q: SectorProbsQ8) -> [u8; FRAME_LEN] {
    [FRAME_HEADER, q.left, q.center, q.right, checksum(q.left, q.center, q.right)]
}

/// Decodes exactly one frame.
pub fn decode_frame(bytes: &[u8]) -> Result<SectorProbsQ8, FrameError> {
    if bytes.len() < FRAME_LEN {
        return Err(FrameError::ShortFrame(bytes.len()));
    }
    if bytes.len() > FRAME_LEN {
        return Err(FrameError::LongFrame(bytes.len()));
    }
    if bytes[0] != FRAME_HEADER {
        return Err(FrameError::BadHeader(bytes[0]));
    }
    let expected = checksum(bytes[1], bytes[2], bytes[3]);
    if bytes[4] != expected {
        return Err(FrameError::BadChecksum { expected, got: bytes[4] });
    }
    Ok(SectorProbsQ8::new(bytes[1], bytes[2], bytes[3]))
}
