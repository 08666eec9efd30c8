use super::ImageryError;

/// Single-band intensity image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self, ImageryError> {
        if width == 0 || height == 0 {
            return Err(ImageryError::InvalidRaster(format!("empty geometry {width}x{height}")));
        }
        if width * height != pixels.len() {
            return Err(ImageryError::InvalidRaster(format!(
                "{width}x{height} raster needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(ImageryError::InvalidRaster(format!(
                "pixel {i} is {} (must be finite and non-negative)",
                pixels[i]
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self, ImageryError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn max_value(&self) -> f64 {
        self.pixels.iter().copied().fold(0.0, f64::max)
    }

    pub fn same_geometry(&self, other: &Raster) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_geometry(&self, other: &Raster) -> Result<(), ImageryError> {
        if self.same_geometry(other) {
            Ok(())
        } else {
            Err(ImageryError::GeometryMismatch { left: (self.width, self.height), right: (other.width, other.height) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_pixels() {
        assert!(Raster::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Raster::new(1, 2, vec![0.0, -1.0]).is_err());
        assert!(Raster::new(1, 2, vec![0.0, f64::NAN]).is_err());
        assert!(Raster::new(0, 0, vec![]).is_err());
        let r = Raster::new(2, 1, vec![3.0, 4.0]).unwrap();
        assert_eq!(r.get(0, 1), 4.0);
        assert_eq!(r.max_value(), 4.0);
    }
}
