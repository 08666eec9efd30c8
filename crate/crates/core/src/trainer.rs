//! Pseudo-label training and full-image inference over the intermediate
//! pixels.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::evalmap::ChangeMap;
use crate::imagery::{ImageryError, PatchSource, Raster};
use crate::network::{Architecture, Mode, ModelParams, NetworkError};
use crate::numerics::{Adam, Rng, Stream};
use crate::preclassify::{PixelClass, SampleSet, TriMap};

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch} (lr = {lr}); try a smaller learning rate")]
    NonFinite { lr: f64, epoch: usize, batch: usize },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Imagery(#[from] ImageryError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub r: usize,
    pub mode: Mode,
    pub mask_width: usize,
    pub sample_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 64,
            lr: 1e-3,
            seed: 42,
            r: 7,
            mode: Mode::Both,
            mask_width: 2,
            sample_fraction: 0.10,
        }
    }
}

impl TrainConfig {
    pub fn architecture(&self) -> Result<Architecture, TrainError> {
        Ok(Architecture::new(self.r, self.mode, self.mask_width)?)
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch size must be positive".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(TrainError::Config(format!("learning rate {} must be positive", self.lr)));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(TrainError::Config(format!("sample fraction {} outside (0, 1]", self.sample_fraction)));
        }
        self.architecture().map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean cross-entropy over the whole sample set after the epoch.
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean loss of the initial parameters over the sample set.
    pub initial_loss: f64,
    pub epochs: Vec<EpochStats>,
    pub wall_time: Duration,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epochs.last().map_or(self.initial_loss, |e| e.loss)
    }

    /// `epoch loss accuracy` rows; epoch 0 is the initial model. Wall time
    /// is left out so logs of identical runs compare equal.
    pub fn to_log(&self) -> String {
        let mut out = String::from("epoch loss accuracy\n");
        let _ = writeln!(out, "0 {:.6} -", self.initial_loss);
        for e in &self.epochs {
            let _ = writeln!(out, "{} {:.6} {:.4}", e.epoch, e.loss, e.accuracy);
        }
        out
    }
}

/// Mean loss and accuracy of `params` over every sample. Evaluated in
/// parallel, summed in sample order.
pub fn evaluate(params: &ModelParams, samples: &SampleSet) -> Result<(f64, f64), TrainError> {
    let per: Vec<(f64, bool)> = samples
        .patches
        .par_iter()
        .zip(&samples.labels)
        .map(|(p, &label)| {
            let z = params.logits(&p.data)?;
            let m = z[0].max(z[1]);
            let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
            Ok((lse - z[label], decide(z) == label))
        })
        .collect::<Result<_, NetworkError>>()?;
    let n = per.len() as f64;
    let loss = per.iter().map(|p| p.0).sum::<f64>() / n;
    let acc = per.iter().filter(|p| p.1).count() as f64 / n;
    Ok((loss, acc))
}

/// Seeded minibatch Adam on softmax cross-entropy. Each batch's gradient is
/// the mean of its per-sample gradients, accumulated in batch order.
pub fn train(samples: &SampleSet, cfg: &TrainConfig) -> Result<(ModelParams, TrainReport), TrainError> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(TrainError::Config("no training samples".into()));
    }
    if let Some(p) = samples.patches.iter().find(|p| p.r != cfg.r) {
        return Err(TrainError::Config(format!("sample patch size {} differs from configured r = {}", p.r, cfg.r)));
    }
    let start = Instant::now();
    let mut params = ModelParams::init(cfg.architecture()?, cfg.seed);
    let mut report =
        TrainReport { initial_loss: f64::NAN, epochs: Vec::with_capacity(cfg.epochs), wall_time: Duration::ZERO };
    report.initial_loss = evaluate(&params, samples)?.0;

    let mut adam = Adam::new(cfg.lr);
    let mut rng = Rng::stream(cfg.seed, Stream::Shuffle);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let sizes: Vec<usize> = params.tensors().iter().map(|t| t.numel()).collect();
    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        for (batch, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let mut sum: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![0.0; n]).collect();
            for &i in chunk {
                let (loss, _, grads) = params.loss_and_grads(&samples.patches[i].data, samples.labels[i])?;
                if !loss.is_finite() {
                    return Err(TrainError::NonFinite { lr: cfg.lr, epoch, batch });
                }
                for (acc, g) in sum.iter_mut().zip(&grads) {
                    for (a, v) in acc.iter_mut().zip(g) {
                        *a += v;
                    }
                }
            }
            let scale = 1.0 / chunk.len() as f64;
            sum.iter_mut().flatten().for_each(|g| *g *= scale);
            let grads: Vec<&[f64]> = sum.iter().map(Vec::as_slice).collect();
            let mut tensors = params.tensors_mut();
            let mut bufs: Vec<&mut [f64]> = tensors.iter_mut().map(|t| t.data_mut()).collect();
            adam.step(&mut bufs, &grads);
            if !params.is_finite() {
                return Err(TrainError::NonFinite { lr: cfg.lr, epoch, batch });
            }
        }
        let (loss, accuracy) = evaluate(&params, samples)?;
        if !loss.is_finite() {
            return Err(TrainError::NonFinite { lr: cfg.lr, epoch, batch: order.len().div_ceil(cfg.batch_size) - 1 });
        }
        report.epochs.push(EpochStats { epoch, loss, accuracy });
    }
    report.wall_time = start.elapsed();
    Ok((params, report))
}

/// Class decision for a pair of logits; exact ties go to unchanged.
pub fn decide(z: [f64; 2]) -> usize {
    usize::from(z[1] > z[0])
}

/// Final change map: Ω_c and Ω_u are copied from the tri-map, each
/// intermediate pixel is classified by the network.
pub fn infer_map(i1: &Raster, i2: &Raster, trimap: &TriMap, params: &ModelParams) -> Result<ChangeMap, TrainError> {
    if trimap.width() != i1.width() || trimap.height() != i1.height() {
        return Err(TrainError::Config(format!(
            "tri-map is {}x{} but images are {}x{}",
            trimap.width(),
            trimap.height(),
            i1.width(),
            i1.height()
        )));
    }
    let source = PatchSource::new(i1, i2)?;
    let w = trimap.width();
    let r = params.arch.r;
    let mut bits: Vec<u8> = trimap.labels().iter().map(|&c| u8::from(c == PixelClass::Changed)).collect();
    let pending = trimap.indices_of(PixelClass::Intermediate);
    let decided: Vec<u8> = pending
        .par_iter()
        .map(|&i| {
            let patch = source.extract((i / w, i % w), r)?;
            Ok(decide(params.logits(&patch.data)?) as u8)
        })
        .collect::<Result<_, TrainError>>()?;
    for (&i, d) in pending.iter().zip(decided) {
        bits[i] = d;
    }
    Ok(ChangeMap::new(w, trimap.height(), bits).expect("geometry from tri-map"))
}
