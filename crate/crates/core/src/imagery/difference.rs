use super::{ImageryError, Raster};

/// Normalized dissimilarity between the two acquisitions, values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl DifferenceImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, ImageryError> {
        if width * height != values.len() || values.is_empty() {
            return Err(ImageryError::InvalidRaster(format!(
                "{width}x{height} difference image with {} values",
                values.len()
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(ImageryError::InvalidRaster("difference values must lie in [0, 1]".into()));
        }
        Ok(Self { width, height, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// 16-bit greymap view (value · 65535) for inspection.
    pub fn to_raster(&self) -> Raster {
        let px = self.values.iter().map(|v| (v * 65535.0).round()).collect();
        Raster::new(self.width, self.height, px).expect("values in range")
    }
}

/// `|ln(i1 + 1) − ln(i2 + 1)|` per pixel, min-max scaled to [0, 1].
/// A flat result (max == min) maps to all zeros.
pub fn log_ratio(i1: &Raster, i2: &Raster) -> Result<DifferenceImage, ImageryError> {
    i1.check_geometry(i2)?;
    let raw: Vec<f64> = i1.pixels().iter().zip(i2.pixels()).map(|(a, b)| (a.ln_1p() - b.ln_1p()).abs()).collect();
    let (lo, hi) = raw.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let values =
        if span > 0.0 { raw.iter().map(|v| ((v - lo) / span).clamp(0.0, 1.0)).collect() } else { vec![0.0; raw.len()] };
    DifferenceImage::new(i1.width(), i1.height(), values)
}
