//! Binary PGM (P5, maxval 255) reading and writing.
//!
//! Header: `P5`, whitespace, width, height, maxval, exactly one whitespace
//! byte, then `width * height` raw bytes in row-major order. `#` comments
//! are allowed between header tokens.

use std::path::Path;

use crate::filter::GrayImage;
use crate::{Error, Result};

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&data)
}

pub fn write_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pgm(img)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct Header<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&c) = self.data.get(self.pos) {
            if c == b'#' {
                while self.data.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.data.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::UnsupportedFormat(format!("PGM header: missing {what}")));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::UnsupportedFormat(format!("PGM header: bad {what}")))
    }
}

pub fn decode_pgm(data: &[u8]) -> Result<GrayImage> {
    match data.get(..2) {
        Some(b"P5") => {}
        Some(b"P2") => return Err(Error::UnsupportedFormat("ASCII PGM (P2) is not supported".into())),
        _ => return Err(Error::UnsupportedFormat("not a binary PGM file (expected P5)".into())),
    }
    let mut hdr = Header { data, pos: 2 };
    let width = hdr.number("width")?;
    let height = hdr.number("height")?;
    let maxval = hdr.number("maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!("maxval {maxval} (only 255 is supported)")));
    }
    if !data.get(hdr.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::UnsupportedFormat("PGM header: missing whitespace after maxval".into()));
    }
    let start = hdr.pos + 1;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::UnsupportedFormat("PGM dimensions overflow".into()))?;
    let payload = data.get(start..start + n).ok_or_else(|| {
        Error::UnsupportedFormat(format!(
            "truncated payload: expected {n} bytes, found {}",
            data.len().saturating_sub(start)
        ))
    })?;
    GrayImage::new(width, height, payload.iter().map(|&b| b as f64).collect())
}

/// Rounds to nearest (ties away from zero) and encodes as P5.
pub fn encode_pgm(img: &GrayImage) -> Result<Vec<u8>> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.reserve(img.pixels().len());
    for (i, &p) in img.pixels().iter().enumerate() {
        let q = p.round();
        if !(0.0..=255.0).contains(&q) {
            return Err(Error::Range(format!(
                "pixel ({}, {}) = {p} does not fit in 8 bits",
                i % img.width(),
                i / img.width()
            )));
        }
        out.push(q as u8);
    }
    Ok(out)
}

/// Clamps every pixel into `[0, 255]`.
pub fn clamp_to_u8_range(img: &GrayImage) -> GrayImage {
    let px = img.pixels().iter().map(|p| p.clamp(0.0, 255.0)).collect();
    GrayImage::new(img.width(), img.height(), px).expect("clamping preserves shape and finiteness")
}
