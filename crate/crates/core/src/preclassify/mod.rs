//! Difference-image clustering into changed / unchanged / intermediate
//! pixels, and pseudo-label sample selection.

mod fcm;
mod sampling;
mod trimap;

pub use fcm::{center_update, fcm, membership_update, objective, FcmConfig, FcmResult};
pub use sampling::{balanced_count, draw_samples, SampleSet};
pub use trimap::{hierarchical_trimap, hierarchical_trimap_with, PixelClass, TriMap};

use crate::imagery::ImageryError;

#[derive(Debug, thiserror::Error)]
pub enum PreclassifyError {
    #[error("invalid preclassification input: {0}")]
    InvalidConfig(String),
    #[error(
        "preclassification produced {changed} changed and {unchanged} unchanged pixels; \
         both classes are needed for training (check the inputs or clustering parameters)"
    )]
    EmptyClass { changed: usize, unchanged: usize },
    #[error(
        "sample fraction {fraction} of min({changed}, {unchanged}) reliable pixels yields no samples; \
         raise the fraction or review the preclassification"
    )]
    TooFewSamples { changed: usize, unchanged: usize, fraction: f64 },
    #[error(transparent)]
    Imagery(#[from] ImageryError),
}
