//! The forward graph, recorded on a [`Tape`] so the same code serves
//! inference and training.

use crate::frequency::{patch_to_dct, DCT_LEN};
use crate::numerics::{Tape, Tensor, Var};

use super::params::{Architecture, ConvParams, ModelParams, SpatialParams, GROUP_CHANNELS, INPUT_CHANNELS};
use super::NetworkError;

/// Loss, logits, and one gradient buffer per parameter tensor.
pub type LossAndGrads = (f64, [f64; 2], Vec<Vec<f64>>);

#[derive(Debug, Clone, Copy)]
pub struct BoundConv {
    pub weight: Var,
    pub bias: Var,
}

#[derive(Debug, Clone, Copy)]
pub struct BoundMrc {
    pub lift: BoundConv,
    pub global: BoundConv,
    pub horizontal: BoundConv,
    pub vertical: BoundConv,
}

#[derive(Debug, Clone)]
pub enum BoundSpatial {
    Mrc(Vec<BoundMrc>),
    Plain(Vec<BoundConv>),
}

#[derive(Debug, Clone, Copy)]
pub struct BoundGate {
    pub info: BoundConv,
    pub gate: BoundConv,
}

/// Model parameters recorded as tape leaves.
#[derive(Debug, Clone)]
pub struct BoundModel {
    pub arch: Architecture,
    pub spatial: Option<BoundSpatial>,
    pub gate: Option<BoundGate>,
    pub head: BoundConv,
    /// Every leaf in canonical parameter order.
    pub vars: Vec<Var>,
}

impl ModelParams {
    /// Records every parameter on `tape`; with `trainable` set their
    /// gradients are kept after `backward`.
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> BoundModel {
        let mut vars = Vec::new();
        let mut bind = |c: &ConvParams, tape: &mut Tape| {
            let mut leaf = |t: &Tensor| {
                let mut t = t.clone();
                t.requires_grad = trainable;
                t.grad = None;
                let v = tape.leaf(t);
                vars.push(v);
                v
            };
            BoundConv { weight: leaf(&c.weight), bias: leaf(&c.bias) }
        };
        let spatial = self.spatial.as_ref().map(|s| match s {
            SpatialParams::Mrc(mods) => BoundSpatial::Mrc(
                mods.iter()
                    .map(|m| BoundMrc {
                        lift: bind(&m.lift, tape),
                        global: bind(&m.global, tape),
                        horizontal: bind(&m.horizontal, tape),
                        vertical: bind(&m.vertical, tape),
                    })
                    .collect(),
            ),
            SpatialParams::Plain(layers) => BoundSpatial::Plain(layers.iter().map(|c| bind(c, tape)).collect()),
        });
        let gate = self.gate.as_ref().map(|g| BoundGate { info: bind(&g.info, tape), gate: bind(&g.gate, tape) });
        let head = bind(&self.head, tape);
        BoundModel { arch: self.arch, spatial, gate, head, vars }
    }

    /// Class scores for one `2×r×r` patch.
    pub fn logits(&self, patch: &Tensor) -> Result<[f64; 2], NetworkError> {
        let mut tape = Tape::new();
        let model = self.bind(&mut tape, false);
        let out = forward(&mut tape, patch, &model)?;
        let z = tape.value(out).data();
        Ok([z[0], z[1]])
    }

    /// Cross-entropy of one labelled patch, its logits, and the gradient
    /// of the loss for every parameter tensor in canonical order.
    pub fn loss_and_grads(&self, patch: &Tensor, label: usize) -> Result<LossAndGrads, NetworkError> {
        let mut tape = Tape::new();
        let model = self.bind(&mut tape, true);
        let logits = forward(&mut tape, patch, &model)?;
        let loss = tape.softmax_cross_entropy(logits, label)?;
        tape.backward(loss)?;
        let z = tape.value(logits).data();
        let grads = model
            .vars
            .iter()
            .map(|&v| tape.grad(v).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; tape.value(v).numel()]))
            .collect();
        Ok((tape.value(loss).data()[0], [z[0], z[1]], grads))
    }
}

/// 0/1 masks over a `GROUP_CHANNELS×r×r` block: the first keeps rows
/// `width..r-width`, the second keeps the same range of columns.
pub fn region_masks(r: usize, width: usize) -> (Vec<f64>, Vec<f64>) {
    let keep = |i: usize| i >= width && i + width < r;
    let mut rows = Vec::with_capacity(GROUP_CHANNELS * r * r);
    let mut cols = Vec::with_capacity(GROUP_CHANNELS * r * r);
    for _ in 0..GROUP_CHANNELS {
        for y in 0..r {
            for x in 0..r {
                rows.push(if keep(y) { 1.0 } else { 0.0 });
                cols.push(if keep(x) { 1.0 } else { 0.0 });
            }
        }
    }
    (rows, cols)
}

fn conv(tape: &mut Tape, x: Var, c: &BoundConv, padding: usize) -> Result<Var, NetworkError> {
    Ok(tape.conv2d(x, c.weight, c.bias, padding)?)
}

/// One multi-region module: lift with a 1×1 conv and ReLU, split into
/// global / horizontal-middle / vertical-middle groups, blank the border
/// rows (horizontal group) or columns (vertical group), run each group
/// through its own 3×3 conv, sum, ReLU.
pub fn mrc_forward(tape: &mut Tape, x: Var, p: &BoundMrc, arch: &Architecture) -> Result<Var, NetworkError> {
    let r = arch.r;
    if r <= 2 * arch.mask_width {
        return Err(NetworkError::Config(format!("patch size {r} too small for mask width {}", arch.mask_width)));
    }
    let lifted = conv(tape, x, &p.lift, 0)?;
    let lifted = tape.relu(lifted);
    let global = tape.slice_channels(lifted, 0, GROUP_CHANNELS)?;
    let horizontal = tape.slice_channels(lifted, GROUP_CHANNELS, GROUP_CHANNELS)?;
    let vertical = tape.slice_channels(lifted, 2 * GROUP_CHANNELS, GROUP_CHANNELS)?;
    let (row_mask, col_mask) = region_masks(r, arch.mask_width);
    let horizontal = tape.mask(horizontal, row_mask)?;
    let vertical = tape.mask(vertical, col_mask)?;
    let g = conv(tape, global, &p.global, 1)?;
    let h = conv(tape, horizontal, &p.horizontal, 1)?;
    let v = conv(tape, vertical, &p.vertical, 1)?;
    let fused = tape.add(g, h)?;
    let fused = tape.add(fused, v)?;
    Ok(tape.relu(fused))
}

/// Four chained spatial modules, flattened to a `5·r·r` vector.
pub fn spatial_branch(
    tape: &mut Tape,
    x: Var,
    spatial: &BoundSpatial,
    arch: &Architecture,
) -> Result<Var, NetworkError> {
    let mut h = x;
    match spatial {
        BoundSpatial::Mrc(mods) => {
            for m in mods {
                h = mrc_forward(tape, h, m, arch)?;
            }
        }
        BoundSpatial::Plain(layers) => {
            for c in layers {
                h = conv(tape, h, c, 1)?;
                h = tape.relu(h);
            }
        }
    }
    Ok(tape.flatten(h))
}

/// `sigmoid(W_g v + b_g) ⊙ (W_i v + b_i)`.
pub fn frequency_branch(tape: &mut Tape, v: Var, g: &BoundGate) -> Result<Var, NetworkError> {
    let n = tape.value(v).numel();
    if n != DCT_LEN {
        return Err(NetworkError::Config(format!("DCT vector has {n} coefficients, expected {DCT_LEN}")));
    }
    let info = tape.linear(v, g.info.weight, g.info.bias)?;
    let pre = tape.linear(v, g.gate.weight, g.gate.bias)?;
    let gate = tape.sigmoid(pre);
    Ok(tape.mul(gate, info)?)
}

/// Logits for one patch: spatial features then frequency features (each
/// only if the mode uses it), concatenated, through the linear head.
pub fn forward(tape: &mut Tape, patch: &Tensor, model: &BoundModel) -> Result<Var, NetworkError> {
    let r = model.arch.r;
    if patch.shape() != [INPUT_CHANNELS, r, r] {
        return Err(NetworkError::Config(format!("patch shape {:?} does not match 2×{r}×{r}", patch.shape())));
    }
    let mut features = Vec::with_capacity(2);
    if let Some(spatial) = &model.spatial {
        let x = tape.leaf(patch.clone());
        features.push(spatial_branch(tape, x, spatial, &model.arch)?);
    }
    if let Some(gate) = &model.gate {
        let v = patch_to_dct(patch)?;
        let v = tape.leaf(v.into_tensor());
        features.push(frequency_branch(tape, v, gate)?);
    }
    let joined = tape.concat(&features)?;
    Ok(tape.linear(joined, model.head.weight, model.head.bias)?)
}
