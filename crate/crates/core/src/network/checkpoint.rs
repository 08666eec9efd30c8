//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! offset  size  field
//! 0       8     magic "DDNETCKP"
//! 8       4     format version (u32, currently 1)
//! 12      4     patch size r (u32)
//! 16      4     mode code (u32: 0 both, 1 no-dct, 2 no-mrc, 3 plain-cnn)
//! 20      4     mask width (u32)
//! 24      8     parameter count N (u64)
//! 32      8·N   parameters as f64, canonical order
//! ```

use std::fs;
use std::path::Path;

use super::params::{Architecture, Mode, ModelParams};
use super::NetworkError;

pub const MAGIC: &[u8; 8] = b"DDNETCKP";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

pub fn encode_checkpoint(params: &ModelParams) -> Vec<u8> {
    let flat = params.flat();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * flat.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(params.arch.r as u32).to_le_bytes());
    out.extend_from_slice(&params.arch.mode.code().to_le_bytes());
    out.extend_from_slice(&(params.arch.mask_width as u32).to_le_bytes());
    out.extend_from_slice(&(flat.len() as u64).to_le_bytes());
    for v in flat {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Reads only the header fields.
pub fn decode_architecture(bytes: &[u8]) -> Result<Architecture, NetworkError> {
    let bad = |msg: String| NetworkError::Checkpoint(msg);
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the {HEADER_LEN}-byte header", bytes.len())));
    }
    if &bytes[..8] != MAGIC {
        return Err(bad("bad magic; not a model checkpoint".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let version = u32_at(8);
    if version != FORMAT_VERSION {
        return Err(bad(format!("unsupported format version {version}")));
    }
    let mode = Mode::from_code(u32_at(16)).ok_or_else(|| bad(format!("unknown mode code {}", u32_at(16))))?;
    Architecture::new(u32_at(12) as usize, mode, u32_at(20) as usize)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<ModelParams, NetworkError> {
    let arch = decode_architecture(bytes)?;
    let mut params = ModelParams::zeros(arch);
    let expected = params.param_count();
    let count = u64::from_le_bytes(bytes[24..32].try_into().expect("8 bytes"));
    if count != expected as u64 {
        return Err(NetworkError::Checkpoint(format!(
            "header declares {count} parameters, architecture needs {expected}"
        )));
    }
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * expected {
        return Err(NetworkError::Checkpoint(format!("payload is {} bytes, expected {}", body.len(), 8 * expected)));
    }
    let mut values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    for t in params.tensors_mut() {
        for v in t.data_mut() {
            *v = values.next().expect("length checked");
        }
    }
    if !params.is_finite() {
        return Err(NetworkError::Checkpoint("non-finite parameter value".into()));
    }
    Ok(params)
}

pub fn save_checkpoint(params: &ModelParams, path: impl AsRef<Path>) -> Result<(), NetworkError> {
    let path = path.as_ref();
    fs::write(path, encode_checkpoint(params))
        .map_err(|e| NetworkError::Io { path: path.display().to_string(), source: e })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelParams, NetworkError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| NetworkError::Io { path: path.display().to_string(), source: e })?;
    decode_checkpoint(&bytes)
}
