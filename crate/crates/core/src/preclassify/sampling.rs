use crate::imagery::{Patch, PatchSource, Raster};
use crate::numerics::{Rng, Stream};

use super::{PixelClass, PreclassifyError, TriMap};

/// Balanced pseudo-labelled training patches. Label 1 is changed.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub patches: Vec<Patch>,
    pub labels: Vec<usize>,
    pub seed: u64,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }
}

/// Per-class sample count: `floor(fraction · min(|changed|, |unchanged|))`.
pub fn balanced_count(changed: usize, unchanged: usize, fraction: f64) -> usize {
    (fraction * changed.min(unchanged) as f64).floor() as usize
}

/// Draws the same number of changed and unchanged centers uniformly without
/// replacement and cuts an `r×r` patch around each. Changed samples come
/// first, each group in draw order.
pub fn draw_samples(
    trimap: &TriMap,
    i1: &Raster,
    i2: &Raster,
    r: usize,
    fraction: f64,
    seed: u64,
) -> Result<SampleSet, PreclassifyError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(PreclassifyError::InvalidConfig(format!("sample fraction {fraction} outside (0, 1]")));
    }
    if trimap.width() != i1.width() || trimap.height() != i1.height() {
        return Err(PreclassifyError::InvalidConfig(format!(
            "tri-map is {}x{} but images are {}x{}",
            trimap.width(),
            trimap.height(),
            i1.width(),
            i1.height()
        )));
    }
    let changed = trimap.indices_of(PixelClass::Changed);
    let unchanged = trimap.indices_of(PixelClass::Unchanged);
    if changed.is_empty() || unchanged.is_empty() {
        return Err(PreclassifyError::EmptyClass { changed: changed.len(), unchanged: unchanged.len() });
    }
    let k = balanced_count(changed.len(), unchanged.len(), fraction);
    if k == 0 {
        return Err(PreclassifyError::TooFewSamples { changed: changed.len(), unchanged: unchanged.len(), fraction });
    }

    let mut rng = Rng::stream(seed, Stream::Sampling);
    let pos = rng.choose_distinct(&changed, k);
    let neg = rng.choose_distinct(&unchanged, k);
    let source = PatchSource::new(i1, i2)?;
    let w = trimap.width();
    let mut patches = Vec::with_capacity(2 * k);
    let mut labels = Vec::with_capacity(2 * k);
    for (idx, label) in pos.iter().map(|&i| (i, 1)).chain(neg.iter().map(|&i| (i, 0))) {
        patches.push(source.extract((idx / w, idx % w), r)?);
        labels.push(label);
    }
    Ok(SampleSet { patches, labels, seed })
}
