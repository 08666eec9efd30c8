//! The dual-domain classifier: a spatial branch of four multi-region
//! convolution modules, a DCT branch with a learned on-off gate, and a
//! linear head over their concatenation.

mod checkpoint;
mod forward;
mod params;

pub use checkpoint::{
    decode_architecture, decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, FORMAT_VERSION,
    HEADER_LEN, MAGIC,
};
pub use forward::{
    forward, frequency_branch, mrc_forward, region_masks, spatial_branch, BoundConv, BoundGate, BoundModel, BoundMrc,
    BoundSpatial, LossAndGrads,
};
pub use params::{
    Architecture, ConvParams, GateParams, Mode, ModelParams, MrcParams, SpatialParams, CLASSES, GROUP_CHANNELS,
    INPUT_CHANNELS, LIFT_CHANNELS, SPATIAL_MODULES,
};

use crate::frequency::FrequencyError;
use crate::numerics::NumericsError;

#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    #[error("network configuration error: {0}")]
    Config(String),
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Frequency(#[from] FrequencyError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
