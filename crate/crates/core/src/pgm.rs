//! Binary PGM (P5) reading and writing, 8-bit and 16-bit.
//!
//! Header comments (`#` to end of line) are skipped on read and never written.
//! 16-bit samples are big-endian, as the format requires.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PgmError {
    #[error("not a binary PGM (expected P5 magic)")]
    BadMagic,
    #[error("malformed PGM header: {0}")]
    BadHeader(String),
    #[error("pixel data truncated: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
}

/// Decoded PGM payload. `maxval <= 255` yields 8-bit samples, otherwise 16-bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize, PgmError> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PgmError::BadHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PgmError::BadHeader(format!("{what} out of range")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Pgm, PgmError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(PgmError::BadMagic);
    }
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(PgmError::BadHeader("zero dimension".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(PgmError::BadHeader(format!("maxval {maxval} not in 1..=65535")));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(h.pos) {
        Some(c) if c.is_ascii_whitespace() => h.pos += 1,
        _ => return Err(PgmError::BadHeader("missing separator after maxval".into())),
    }
    let bpp = if maxval < 256 { 1 } else { 2 };
    let n = width.checked_mul(height).ok_or_else(|| PgmError::BadHeader("dimensions overflow".into()))?;
    let needed = n * bpp;
    let data = &bytes[h.pos..];
    if data.len() < needed {
        return Err(PgmError::Truncated { needed, have: data.len() });
    }
    let samples = if bpp == 1 {
        data[..n].iter().map(|&b| b as u16).collect()
    } else {
        data[..needed].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    };
    Ok(Pgm { width, height, maxval: maxval as u16, samples })
}

pub fn encode(pgm: &Pgm) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", pgm.width, pgm.height, pgm.maxval).into_bytes();
    if pgm.maxval < 256 {
        out.extend(pgm.samples.iter().map(|&s| s as u8));
    } else {
        for s in &pgm.samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_tolerated() {
        let bytes = b"P5\n# made by hand\n2 1 # trailing\n255\n\x01\x02";
        let p = decode(bytes).unwrap();
        assert_eq!((p.width, p.height, p.maxval), (2, 1, 255));
        assert_eq!(p.samples, vec![1, 2]);
    }

    #[test]
    fn sixteen_bit_big_endian() {
        let p = Pgm { width: 2, height: 1, maxval: 65535, samples: vec![2000, 65535] };
        let bytes = encode(&p);
        assert_eq!(&bytes[bytes.len() - 4..], &[0x07, 0xD0, 0xFF, 0xFF]);
        assert_eq!(decode(&bytes).unwrap(), p);
    }

    #[test]
    fn header_errors() {
        assert_eq!(decode(b"P6\n1 1\n255\n\x00"), Err(PgmError::BadMagic));
        assert!(matches!(decode(b"P5\n1\n255\n"), Err(PgmError::BadHeader(_))));
        assert!(matches!(decode(b"P5\n1 1\n0\n\x00"), Err(PgmError::BadHeader(_))));
        assert_eq!(decode(b"P5\n2 2\n255\n\x00"), Err(PgmError::Truncated { needed: 4, have: 1 }));
    }
}
