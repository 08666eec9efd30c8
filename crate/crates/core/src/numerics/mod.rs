//! Tensors, recorded differentiable ops, Adam, and the seeded generator.

mod adam;
mod rng;
mod tape;
mod tensor;

pub use adam::Adam;
pub use rng::{Rng, Stream};
pub use tape::{sigmoid, Tape, Var};
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NumericsError {
    #[error("{op}: {axis} mismatch (expected {expected}, found {found})")]
    Dimension { op: &'static str, axis: &'static str, expected: usize, found: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("{0}")]
    Contract(String),
}

#[cfg(test)]
mod tests;
