use crate::numerics::Tensor;

use super::{ImageryError, Raster};

/// Two-channel `r×r` window around one pixel: channel 0 from the first
/// acquisition, channel 1 from the second.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub center: (usize, usize),
    pub r: usize,
    pub data: Tensor,
}

/// Pixel grid of both acquisitions plus their intensity scales, so patches
/// can be cut repeatedly without rescanning the images.
#[derive(Debug, Clone)]
pub struct PatchSource<'a> {
    i1: &'a Raster,
    i2: &'a Raster,
    scale: [f64; 2],
}

impl<'a> PatchSource<'a> {
    pub fn new(i1: &'a Raster, i2: &'a Raster) -> Result<Self, ImageryError> {
        i1.check_geometry(i2)?;
        Ok(Self { i1, i2, scale: [i1.max_value(), i2.max_value()] })
    }

    pub fn width(&self) -> usize {
        self.i1.width()
    }

    pub fn height(&self) -> usize {
        self.i1.height()
    }

    /// Out-of-bounds taps replicate the nearest edge pixel; values are
    /// divided by each image's maximum.
    pub fn extract(&self, center: (usize, usize), r: usize) -> Result<Patch, ImageryError> {
        if r.is_multiple_of(2) {
            return Err(ImageryError::InvalidPatchSize(r));
        }
        let (row, col) = center;
        let (w, h) = (self.width(), self.height());
        if row >= h || col >= w {
            return Err(ImageryError::CenterOutOfBounds { row, col, width: w, height: h });
        }
        let half = (r / 2) as isize;
        let mut data = Vec::with_capacity(2 * r * r);
        for (img, max) in [(self.i1, self.scale[0]), (self.i2, self.scale[1])] {
            for dy in -half..=half {
                let y = (row as isize + dy).clamp(0, h as isize - 1) as usize;
                for dx in -half..=half {
                    let x = (col as isize + dx).clamp(0, w as isize - 1) as usize;
                    data.push(if max > 0.0 { img.get(y, x) / max } else { 0.0 });
                }
            }
        }
        let data = Tensor::new(&[2, r, r], data).expect("2·r·r values");
        Ok(Patch { center, r, data })
    }
}

pub fn extract_patch(i1: &Raster, i2: &Raster, center: (usize, usize), r: usize) -> Result<Patch, ImageryError> {
    PatchSource::new(i1, i2)?.extract(center, r)
}
