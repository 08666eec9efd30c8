use std::fmt;
use std::str::FromStr;

use crate::frequency::DCT_LEN;
use crate::numerics::{Rng, Stream, Tensor};

use super::NetworkError;

/// Channels produced by the 1×1 lift inside each MRC module.
pub const LIFT_CHANNELS: usize = 15;
/// Channels per region group, and the output width of every spatial module.
pub const GROUP_CHANNELS: usize = LIFT_CHANNELS / 3;
pub const SPATIAL_MODULES: usize = 4;
pub const INPUT_CHANNELS: usize = 2;
pub const CLASSES: usize = 2;

/// Which branches feed the classifier head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Spatial MRC branch and DCT gate branch.
    Both,
    /// MRC branch only.
    SpatialOnly,
    /// DCT gate branch only.
    FreqOnly,
    /// Four plain 3×3 conv layers, no DCT branch.
    PlainCnn,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Both, Mode::SpatialOnly, Mode::FreqOnly, Mode::PlainCnn];

    pub fn code(self) -> u32 {
        match self {
            Mode::Both => 0,
            Mode::SpatialOnly => 1,
            Mode::FreqOnly => 2,
            Mode::PlainCnn => 3,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Both => "both",
            Mode::SpatialOnly => "no-dct",
            Mode::FreqOnly => "no-mrc",
            Mode::PlainCnn => "plain-cnn",
        }
    }

    pub fn uses_spatial(self) -> bool {
        self != Mode::FreqOnly
    }

    pub fn uses_frequency(self) -> bool {
        matches!(self, Mode::Both | Mode::FreqOnly)
    }

    /// Width of the concatenated feature vector fed to the head.
    pub fn feature_len(self, r: usize) -> usize {
        let spatial = if self.uses_spatial() { GROUP_CHANNELS * r * r } else { 0 };
        let freq = if self.uses_frequency() { DCT_LEN } else { 0 };
        spatial + freq
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            NetworkError::Config(format!("unknown mode {s:?} (expected both, no-dct, no-mrc or plain-cnn)"))
        })
    }
}

/// Architecture hyperparameters; everything needed to lay out the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Architecture {
    pub r: usize,
    pub mode: Mode,
    /// Rows (columns) zeroed at each border of the horizontal (vertical)
    /// region group.
    pub mask_width: usize,
}

impl Architecture {
    pub fn new(r: usize, mode: Mode, mask_width: usize) -> Result<Self, NetworkError> {
        if r.is_multiple_of(2) || r < 3 {
            return Err(NetworkError::Config(format!("patch size {r} must be odd and at least 3")));
        }
        if matches!(mode, Mode::Both | Mode::SpatialOnly) && r <= 2 * mask_width {
            return Err(NetworkError::Config(format!(
                "patch size {r} leaves no unmasked center with mask width {mask_width} (need r ≥ {})",
                2 * mask_width + 1
            )));
        }
        Ok(Self { r, mode, mask_width })
    }

    pub fn feature_len(&self) -> usize {
        self.mode.feature_len(self.r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub weight: Tensor,
    pub bias: Tensor,
}

/// One multi-region module: a 1×1 lift to 15 channels, then a 3×3 conv per
/// region group (global, horizontal-middle, vertical-middle).
#[derive(Debug, Clone, PartialEq)]
pub struct MrcParams {
    pub lift: ConvParams,
    pub global: ConvParams,
    pub horizontal: ConvParams,
    pub vertical: ConvParams,
}

/// The two 128×128 maps of the DCT on-off switch.
#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    pub info: ConvParams,
    pub gate: ConvParams,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpatialParams {
    Mrc(Vec<MrcParams>),
    Plain(Vec<ConvParams>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: Architecture,
    pub spatial: Option<SpatialParams>,
    pub gate: Option<GateParams>,
    pub head: ConvParams,
}

fn init_uniform(rng: &mut Rng, shape: &[usize], fan_in: usize) -> Tensor {
    let bound = (6.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.uniform_in(-bound, bound)).collect();
    Tensor::new(shape, data).expect("valid shape")
}

fn conv(rng: &mut Rng, c_out: usize, c_in: usize, k: usize) -> ConvParams {
    ConvParams { weight: init_uniform(rng, &[c_out, c_in, k, k], c_in * k * k), bias: Tensor::zeros(&[c_out]) }
}

fn dense(rng: &mut Rng, out: usize, inp: usize) -> ConvParams {
    ConvParams { weight: init_uniform(rng, &[out, inp], inp), bias: Tensor::zeros(&[out]) }
}

impl ModelParams {
    /// Weights uniform in ±√(6 / fan_in), biases zero, drawn in canonical
    /// parameter order from the seed's init stream.
    pub fn init(arch: Architecture, seed: u64) -> Self {
        let mut rng = Rng::stream(seed, Stream::Init);
        let spatial = match arch.mode {
            Mode::Both | Mode::SpatialOnly => Some(SpatialParams::Mrc(
                (0..SPATIAL_MODULES)
                    .map(|i| {
                        let c_in = if i == 0 { INPUT_CHANNELS } else { GROUP_CHANNELS };
                        MrcParams {
                            lift: conv(&mut rng, LIFT_CHANNELS, c_in, 1),
                            global: conv(&mut rng, GROUP_CHANNELS, GROUP_CHANNELS, 3),
                            horizontal: conv(&mut rng, GROUP_CHANNELS, GROUP_CHANNELS, 3),
                            vertical: conv(&mut rng, GROUP_CHANNELS, GROUP_CHANNELS, 3),
                        }
                    })
                    .collect(),
            )),
            Mode::PlainCnn => Some(SpatialParams::Plain(
                (0..SPATIAL_MODULES)
                    .map(|i| {
                        let c_in = if i == 0 { INPUT_CHANNELS } else { GROUP_CHANNELS };
                        conv(&mut rng, GROUP_CHANNELS, c_in, 3)
                    })
                    .collect(),
            )),
            Mode::FreqOnly => None,
        };
        let gate = arch
            .mode
            .uses_frequency()
            .then(|| GateParams { info: dense(&mut rng, DCT_LEN, DCT_LEN), gate: dense(&mut rng, DCT_LEN, DCT_LEN) });
        let head = dense(&mut rng, CLASSES, arch.feature_len());
        Self { arch, spatial, gate, head }
    }

    /// Same layout with every weight and bias zero.
    pub fn zeros(arch: Architecture) -> Self {
        let mut p = Self::init(arch, 0);
        for t in p.tensors_mut() {
            t.data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
        p
    }

    /// Every parameter tensor in canonical order: spatial modules (lift,
    /// global, horizontal, vertical; weight then bias), gate (info, gate),
    /// head.
    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        collect_order(self, &mut |c| {
            out.push(&c.weight);
            out.push(&c.bias);
        });
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = Vec::new();
        match &mut self.spatial {
            Some(SpatialParams::Mrc(mods)) => {
                for m in mods {
                    for c in [&mut m.lift, &mut m.global, &mut m.horizontal, &mut m.vertical] {
                        out.push(&mut c.weight);
                        out.push(&mut c.bias);
                    }
                }
            }
            Some(SpatialParams::Plain(layers)) => {
                for c in layers {
                    out.push(&mut c.weight);
                    out.push(&mut c.bias);
                }
            }
            None => {}
        }
        if let Some(g) = &mut self.gate {
            for c in [&mut g.info, &mut g.gate] {
                out.push(&mut c.weight);
                out.push(&mut c.bias);
            }
        }
        out.push(&mut self.head.weight);
        out.push(&mut self.head.bias);
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.numel()).sum()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.data().iter().copied()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }
}

fn collect_order<'a>(p: &'a ModelParams, f: &mut impl FnMut(&'a ConvParams)) {
    match &p.spatial {
        Some(SpatialParams::Mrc(mods)) => {
            for m in mods {
                for c in [&m.lift, &m.global, &m.horizontal, &m.vertical] {
                    f(c);
                }
            }
        }
        Some(SpatialParams::Plain(layers)) => layers.iter().for_each(&mut *f),
        None => {}
    }
    if let Some(g) = &p.gate {
        f(&g.info);
        f(&g.gate);
    }
    f(&p.head);
}
