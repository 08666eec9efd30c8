//! Synthetic bitemporal scenes with multiplicative gamma speckle and an
//! exact change mask.
//!
//! Intensity is `I = R · S` where `R` is the noise-free reflectivity and
//! `S` is the mean of `L` unit-mean exponential draws (an L-look gamma
//! variate: mean 1, variance 1/L). Generated intensities are rounded to
//! integers so a scene survives a PGM round trip unchanged.

use crate::evalmap::ChangeMap;
use crate::imagery::Raster;
use crate::numerics::{Rng, Stream};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid scene: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Rect { top: usize, left: usize, height: usize, width: usize },
    Disk { row: usize, col: usize, radius: usize },
}

impl Shape {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        match *self {
            Shape::Rect { top, left, height, width } => {
                row >= top && row < top + height && col >= left && col < left + width
            }
            Shape::Disk { row: cr, col: cc, radius } => {
                let dy = row as i64 - cr as i64;
                let dx = col as i64 - cc as i64;
                dy * dy + dx * dx <= (radius * radius) as i64
            }
        }
    }

    fn fits(&self, width: usize, height: usize) -> bool {
        match *self {
            Shape::Rect { top, left, height: h, width: w } => h > 0 && w > 0 && top + h <= height && left + w <= width,
            Shape::Disk { row, col, radius } => {
                row >= radius && col >= radius && row + radius < height && col + radius < width
            }
        }
    }
}

/// A region whose reflectivity becomes `level` in the second acquisition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Change {
    pub shape: Shape,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub background_level: f64,
    pub object_level: f64,
    /// Present in both acquisitions at `object_level`.
    pub objects: Vec<Shape>,
    /// Applied in order on top of the first acquisition's reflectivity.
    pub changes: Vec<Change>,
    pub looks: u32,
    pub seed: u64,
}

impl SceneSpec {
    /// 128×128, background 30, static objects at 120, two changed
    /// rectangles and one disk covering about 8 % of the scene, 4 looks.
    ///
    /// Changes are strong (a factor of about 20 in reflectivity) so that a
    /// pixel-wise log-ratio threshold can find a reliable core of changed
    /// pixels through 4-look speckle.
    pub fn default_scene(seed: u64) -> Self {
        Self {
            width: 128,
            height: 128,
            background_level: 30.0,
            object_level: 120.0,
            objects: vec![
                Shape::Rect { top: 12, left: 70, height: 22, width: 40 },
                Shape::Rect { top: 80, left: 14, height: 30, width: 18 },
            ],
            changes: vec![
                Change { shape: Shape::Rect { top: 22, left: 14, height: 20, width: 26 }, level: 600.0 },
                Change { shape: Shape::Rect { top: 14, left: 78, height: 14, width: 22 }, level: 6.0 },
                Change { shape: Shape::Disk { row: 92, col: 88, radius: 13 }, level: 600.0 },
            ],
            looks: 4,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Invalid(m));
        if self.width == 0 || self.height == 0 {
            return bad(format!("empty geometry {}x{}", self.width, self.height));
        }
        if self.looks == 0 {
            return bad("looks must be positive".into());
        }
        let levels = [self.background_level, self.object_level].into_iter().chain(self.changes.iter().map(|c| c.level));
        for level in levels {
            if !(level > 0.0 && level.is_finite()) {
                return bad(format!("reflectivity level {level} must be positive"));
            }
        }
        let shapes = self.objects.iter().chain(self.changes.iter().map(|c| &c.shape));
        for s in shapes {
            if !s.fits(self.width, self.height) {
                return bad(format!("{s:?} extends outside the {}x{} scene", self.width, self.height));
            }
        }
        Ok(())
    }

    /// Noise-free reflectivity before and after the changes.
    pub fn reflectivity(&self) -> (Vec<f64>, Vec<f64>) {
        let (w, h) = (self.width, self.height);
        let mut before = vec![self.background_level; w * h];
        for row in 0..h {
            for col in 0..w {
                if self.objects.iter().any(|s| s.contains(row, col)) {
                    before[row * w + col] = self.object_level;
                }
            }
        }
        let mut after = before.clone();
        for c in &self.changes {
            for row in 0..h {
                for col in 0..w {
                    if c.shape.contains(row, col) {
                        after[row * w + col] = c.level;
                    }
                }
            }
        }
        (before, after)
    }
}

/// One L-look speckle multiplier: the mean of `looks` exponential draws.
pub fn speckle_sample(rng: &mut Rng, looks: u32) -> f64 {
    (0..looks).map(|_| rng.exponential()).sum::<f64>() / f64::from(looks)
}

fn speckled(reflectivity: &[f64], looks: u32, rng: &mut Rng) -> Vec<f64> {
    reflectivity.iter().map(|&r| (r * speckle_sample(rng, looks)).round().min(65535.0)).collect()
}

/// Both acquisitions and the truth mask (pixels whose reflectivity differs).
pub fn generate(spec: &SceneSpec) -> Result<(Raster, Raster, ChangeMap), SynthError> {
    spec.validate()?;
    let (before, after) = spec.reflectivity();
    let bits = before.iter().zip(&after).map(|(a, b)| u8::from(a != b)).collect();
    let i1 = speckled(&before, spec.looks, &mut Rng::stream(spec.seed, Stream::SpeckleFirst));
    let i2 = speckled(&after, spec.looks, &mut Rng::stream(spec.seed, Stream::SpeckleSecond));
    let to_raster = |px| Raster::new(spec.width, spec.height, px).map_err(|e| SynthError::Invalid(e.to_string()));
    let truth = ChangeMap::new(spec.width, spec.height, bits).map_err(|e| SynthError::Invalid(e.to_string()))?;
    Ok((to_raster(i1)?, to_raster(i2)?, truth))
}
