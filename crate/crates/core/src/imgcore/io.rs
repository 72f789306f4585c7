//! Binary PGM (P5, 8-bit) and BSRF displacement-field codecs.

use std::fs;
use std::path::Path;

use super::{DisplacementField, Image};
use crate::error::{Error, Result};

const FIELD_MAGIC: &[u8; 4] = b"BSRF";

struct HeaderCursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c => self.pos += 1,
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn read_number(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Malformed(format!("PGM header: missing {what}")));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Malformed(format!("PGM header: bad {what}")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 {
        return Err(Error::Malformed("PGM: file too short".into()));
    }
    match &bytes[..2] {
        b"P5" => {}
        b"P1" | b"P2" | b"P3" | b"P4" | b"P6" | b"P7" => {
            return Err(Error::UnsupportedFormat(format!(
                "netpbm variant {}, only binary P5 is supported",
                String::from_utf8_lossy(&bytes[..2])
            )))
        }
        _ => return Err(Error::UnsupportedFormat("not a PGM file".into())),
    }
    let mut cur = HeaderCursor { data: bytes, pos: 2 };
    let width = cur.read_number("width")?;
    let height = cur.read_number("height")?;
    let maxval = cur.read_number("maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!(
            "PGM maxval {maxval}, only 255 is supported"
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::Malformed(format!("PGM: empty raster {width}x{height}")));
    }
    // exactly one whitespace byte separates the header from the payload
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(Error::Malformed("PGM: missing separator before payload".into()));
    }
    let start = cur.pos + 1;
    let need = width
        .checked_mul(height)
        .ok_or_else(|| Error::Malformed("PGM: dimensions overflow".into()))?;
    let payload = &bytes[start..];
    if payload.len() < need {
        return Err(Error::Malformed(format!(
            "PGM: truncated payload, {} of {need} bytes",
            payload.len()
        )));
    }
    let data = payload[..need].iter().map(|&b| b as f64 / 255.0).collect();
    Image::new(width, height, data)
}

/// Encodes with a canonical `P5\n<w> <h>\n255\n` header. Samples are clamped
/// to [0, 1] and rounded to the nearest 8-bit level.
pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.len());
    out.extend_from_slice(header.as_bytes());
    out.extend(
        img.data()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    out
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_pgm(img))
}

pub fn encode_field(field: &DisplacementField) -> Vec<u8> {
    let n = field.width() * field.height();
    let mut out = Vec::with_capacity(12 + 8 * n);
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&(field.width() as u32).to_le_bytes());
    out.extend_from_slice(&(field.height() as u32).to_le_bytes());
    for plane in [&field.dx, &field.dy] {
        for &v in plane.iter() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<DisplacementField> {
    if bytes.len() < 12 {
        return Err(Error::Malformed("BSRF: truncated header".into()));
    }
    if &bytes[..4] != FIELD_MAGIC {
        return Err(Error::Malformed("BSRF: bad magic".into()));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if width == 0 || height == 0 {
        return Err(Error::Malformed(format!("BSRF: empty field {width}x{height}")));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Malformed("BSRF: dimensions overflow".into()))?;
    let expected = 12 + 8 * n;
    if bytes.len() != expected {
        return Err(Error::Malformed(format!(
            "BSRF: payload is {} bytes, expected {expected} for {width}x{height}",
            bytes.len()
        )));
    }
    let floats: Vec<f64> = bytes[12..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let (dx, dy) = floats.split_at(n);
    DisplacementField::new(width, height, dx.to_vec(), dy.to_vec())
}

pub fn load_field(path: impl AsRef<Path>) -> Result<DisplacementField> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_field(&bytes)
}

pub fn save_field(field: &DisplacementField, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_field(field))
}

/// Write to a sibling temp file, then rename over the destination.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
