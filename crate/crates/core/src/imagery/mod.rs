//! Raster I/O, the log-ratio difference image and patch extraction.

mod difference;
mod patch;
mod pgm;
mod raster;

pub use difference::{log_ratio, DifferenceImage};
pub use patch::{extract_patch, Patch, PatchSource};
pub use pgm::{decode_pgm, encode_pgm, load_pgm, save_pgm};
pub use raster::Raster;

#[derive(Debug, thiserror::Error)]
pub enum ImageryError {
    #[error("PGM parse error at byte {offset}: {msg}")]
    Parse { offset: usize, msg: String },
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("invalid raster: {0}")]
    InvalidRaster(String),
    #[error("geometry mismatch: {left:?} vs {right:?} (width, height)")]
    GeometryMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("patch center ({row}, {col}) outside {width}x{height} raster")]
    CenterOutOfBounds { row: usize, col: usize, width: usize, height: usize },
    #[error("patch size {0} must be odd")]
    InvalidPatchSize(usize),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
