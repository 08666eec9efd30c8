//! Binary greymap (P5) reading and writing.
//!
//! Samples are returned as the stored integers; no rescaling by maxval.
//! Two-byte samples (maxval > 255) are big-endian.

use std::fs;
use std::path::Path;

use super::{ImageryError, Raster};

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn err(&self, msg: impl Into<String>) -> ImageryError {
        ImageryError::Parse { offset: self.pos, msg: msg.into() }
    }

    /// Skips whitespace and `#` comments.
    fn skip_separators(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn read_uint(&mut self, what: &str) -> Result<usize, ImageryError> {
        self.skip_separators();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageryError::Parse { offset: start, msg: format!("{what} out of range") })
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Raster, ImageryError> {
    let mut cur = Cursor { bytes, pos: 0 };
    match bytes.get(..2) {
        Some(b"P5") => {}
        Some(magic) if magic[0] == b'P' => {
            return Err(ImageryError::UnsupportedFormat(format!(
                "magic {:?}; only binary greymaps (P5) are supported",
                String::from_utf8_lossy(magic)
            )))
        }
        _ => return Err(cur.err("missing PNM magic number")),
    }
    cur.pos = 2;
    if !bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(cur.err("expected whitespace after magic number"));
    }
    let width = cur.read_uint("width")?;
    let height = cur.read_uint("height")?;
    let maxval = cur.read_uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(cur.err(format!("empty image {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(cur.err(format!("maxval {maxval} outside 1..=65535")));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(cur.err("expected single whitespace before raster data")),
    }
    let sample_bytes = if maxval < 256 { 1 } else { 2 };
    let needed = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(sample_bytes))
        .ok_or_else(|| cur.err("image dimensions overflow"))?;
    let payload = &bytes[cur.pos..];
    if payload.len() < needed {
        return Err(ImageryError::Parse {
            offset: bytes.len(),
            msg: format!("truncated payload: expected {needed} bytes, found {}", payload.len()),
        });
    }
    let pixels: Vec<f64> = if sample_bytes == 1 {
        payload[..needed].iter().map(|&b| f64::from(b)).collect()
    } else {
        payload[..needed].chunks_exact(2).map(|c| f64::from(u16::from_be_bytes([c[0], c[1]]))).collect()
    };
    if let Some(i) = pixels.iter().position(|&v| v > maxval as f64) {
        return Err(ImageryError::Parse {
            offset: cur.pos + i * sample_bytes,
            msg: format!("sample {} exceeds maxval {maxval}", pixels[i]),
        });
    }
    Raster::new(width, height, pixels)
}

/// Encodes with maxval 255 when every sample fits in a byte, else 65535.
/// Samples are rounded to the nearest integer and clamped to 65535.
pub fn encode_pgm(raster: &Raster) -> Vec<u8> {
    let quantized: Vec<u16> = raster.pixels().iter().map(|&v| v.round().min(65535.0) as u16).collect();
    let maxval: u16 = if quantized.iter().all(|&v| v <= 255) { 255 } else { 65535 };
    let mut out = format!("P5\n{} {}\n{}\n", raster.width(), raster.height(), maxval).into_bytes();
    if maxval == 255 {
        out.extend(quantized.iter().map(|&v| v as u8));
    } else {
        for v in quantized {
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    out
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<Raster, ImageryError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| ImageryError::Io { path: path.display().to_string(), source: e })?;
    decode_pgm(&bytes)
}

pub fn save_pgm(raster: &Raster, path: impl AsRef<Path>) -> Result<(), ImageryError> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(raster)).map_err(|e| ImageryError::Io { path: path.display().to_string(), source: e })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn decodes_8bit() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend([0, 128, 255, 7]);
        let r = decode_pgm(&bytes).unwrap();
        assert_eq!((r.width(), r.height()), (2, 2));
        assert_eq!(r.pixels(), &[0.0, 128.0, 255.0, 7.0]);
    }

    #[test]
    fn decodes_16bit_with_comment() {
        let mut bytes = b"P5 # a comment\n1 2 # dims\n1000\n".to_vec();
        bytes.extend([0x03, 0xE8, 0x00, 0x01]);
        let r = decode_pgm(&bytes).unwrap();
        assert_eq!(r.pixels(), &[1000.0, 1.0]);
    }

    #[test]
    fn rejects_ascii_variant() {
        let err = decode_pgm(b"P2\n2 1\n255\n0 1\n").unwrap_err();
        assert!(matches!(err, ImageryError::UnsupportedFormat(_)), "{err}");
    }

    #[test]
    fn reports_offsets() {
        match decode_pgm(b"P5\n2 x\n255\n").unwrap_err() {
            ImageryError::Parse { offset, .. } => assert_eq!(offset, 5),
            e => panic!("unexpected {e}"),
        }
        match decode_pgm(b"P5\n2 2\n255\n\x01\x02").unwrap_err() {
            ImageryError::Parse { offset, msg } => {
                assert_eq!(offset, 13);
                assert!(msg.contains("truncated"));
            }
            e => panic!("unexpected {e}"),
        }
        assert!(decode_pgm(b"").is_err());
        assert!(decode_pgm(b"P5\n1 1\n70000\n\0\0").is_err());
    }

    #[test]
    fn rejects_sample_above_maxval() {
        assert!(decode_pgm(b"P5\n1 1\n100\n\xff").is_err());
    }

    proptest! {
        #[test]
        fn integer_rasters_round_trip(w in 1usize..12, h in 1usize..12, wide in any::<bool>(), seed in any::<u64>()) {
            let mut rng = crate::numerics::Rng::new(seed);
            let top = if wide { 65536 } else { 256 };
            let pixels = (0..w * h).map(|_| rng.below(top) as f64).collect();
            let raster = Raster::new(w, h, pixels).unwrap();
            prop_assert_eq!(decode_pgm(&encode_pgm(&raster)).unwrap(), raster);
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        let raster = Raster::new(3, 1, vec![0.0, 300.0, 65535.0]).unwrap();
        save_pgm(&raster, &path).unwrap();
        assert_eq!(load_pgm(&path).unwrap(), raster);
        assert!(matches!(load_pgm(dir.path().join("missing.pgm")), Err(ImageryError::Io { .. })));
    }
}
