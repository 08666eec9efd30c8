//! Binary change maps and their agreement scores against ground truth.

use std::fmt;
use std::path::Path;

use crate::imagery::{save_pgm, ImageryError, Raster};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("geometry mismatch: {left:?} vs {right:?} (width, height)")]
    GeometryMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("invalid change map: {0}")]
    Invalid(String),
    #[error(transparent)]
    Imagery(#[from] ImageryError),
}

/// Per-pixel decision, 1 = changed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeMap {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

impl ChangeMap {
    pub fn new(width: usize, height: usize, bits: Vec<u8>) -> Result<Self, EvalError> {
        if width == 0 || height == 0 || width * height != bits.len() {
            return Err(EvalError::Invalid(format!("{width}x{height} map with {} pixels", bits.len())));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(EvalError::Invalid("map values must be 0 or 1".into()));
        }
        Ok(Self { width, height, bits })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self, EvalError> {
        Self::new(width, height, vec![0; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn changed_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Ground-truth convention: any level ≥ 128 reads as changed.
    pub fn from_raster(raster: &Raster) -> Self {
        let bits = raster.pixels().iter().map(|&v| u8::from(v >= 128.0)).collect();
        Self { width: raster.width(), height: raster.height(), bits }
    }

    /// 0 for unchanged, 255 for changed.
    pub fn to_raster(&self) -> Raster {
        let px = self.bits.iter().map(|&b| if b == 1 { 255.0 } else { 0.0 }).collect();
        Raster::new(self.width, self.height, px).expect("valid geometry")
    }

    fn check_geometry(&self, other: &ChangeMap) -> Result<(), EvalError> {
        if self.width == other.width && self.height == other.height {
            Ok(())
        } else {
            Err(EvalError::GeometryMismatch { left: (self.width, self.height), right: (other.width, other.height) })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
    /// Overall error, FP + FN.
    pub oe: u64,
    /// Percentage of correct classification.
    pub pcc: f64,
    /// Kappa coefficient, in percent.
    pub kc: f64,
}

impl MetricsReport {
    /// Derives OE, PCC and KC from the confusion counts. When chance
    /// agreement is total (PRE = 1) kappa is undefined and reported as 0.
    pub fn from_counts(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        let n = (tp + tn + fp + fn_) as f64;
        let (tp_f, tn_f, fp_f, fn_f) = (tp as f64, tn as f64, fp as f64, fn_ as f64);
        let pcc = (tp_f + tn_f) / n;
        let pre = ((tp_f + fp_f) * (tp_f + fn_f) + (fn_f + tn_f) * (fp_f + tn_f)) / (n * n);
        let kc = if pre >= 1.0 { 0.0 } else { (pcc - pre) / (1.0 - pre) };
        Self { tp, tn, fp, fn_, oe: fp + fn_, pcc: 100.0 * pcc, kc: 100.0 * kc }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// `FP FN OE PCC KC` on one line.
    pub fn to_line(&self) -> String {
        format!("{} {} {} {:.4} {:.4}", self.fp, self.fn_, self.oe, self.pcc, self.kc)
    }

    /// One `key = value` pair per line.
    pub fn to_kv_block(&self) -> String {
        format!(
            "TP = {}\nTN = {}\nFP = {}\nFN = {}\nOE = {}\nPCC = {:.4}\nKC = {:.4}\n",
            self.tp, self.tn, self.fp, self.fn_, self.oe, self.pcc, self.kc
        )
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_kv_block())
    }
}

pub fn score(map: &ChangeMap, truth: &ChangeMap) -> Result<MetricsReport, EvalError> {
    map.check_geometry(truth)?;
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (&p, &t) in map.bits.iter().zip(&truth.bits) {
        match (p, t) {
            (1, 1) => tp += 1,
            (0, 0) => tn += 1,
            (1, 0) => fp += 1,
            _ => fn_ += 1,
        }
    }
    Ok(MetricsReport::from_counts(tp, tn, fp, fn_))
}

pub fn write_map(map: &ChangeMap, path: impl AsRef<Path>) -> Result<(), EvalError> {
    Ok(save_pgm(&map.to_raster(), path)?)
}

/// Grey levels per outcome: TP 255, TN 0, FP 170, FN 85.
pub fn diff_overlay(map: &ChangeMap, truth: &ChangeMap) -> Result<Raster, EvalError> {
    map.check_geometry(truth)?;
    let px = map
        .bits
        .iter()
        .zip(&truth.bits)
        .map(|(&p, &t)| match (p, t) {
            (1, 1) => 255.0,
            (0, 0) => 0.0,
            (1, 0) => 170.0,
            _ => 85.0,
        })
        .collect();
    Ok(Raster::new(map.width, map.height, px).expect("valid geometry"))
}
