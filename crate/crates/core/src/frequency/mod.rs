//! Frequency-domain features: resize each patch channel to 8×8 and take an
//! orthonormal type-II DCT of it.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::numerics::Tensor;

pub const BLOCK: usize = 8;
/// Two channels of 64 coefficients.
pub const DCT_LEN: usize = 2 * BLOCK * BLOCK;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FrequencyError {
    #[error("expected a 2×r×r patch, got shape {0:?}")]
    PatchShape(Vec<usize>),
    #[error("patch size {0} is below the minimum of 2 for resizing")]
    PatchTooSmall(usize),
}

/// The 128 DCT coefficients of a patch, channel 0 first, each channel's
/// 8×8 block in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DctVector(Vec<f64>);

impl DctVector {
    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor {
        Tensor::from_vec(self.0)
    }
}

fn check_patch(patch: &Tensor) -> Result<usize, FrequencyError> {
    let s = patch.shape();
    if s.len() != 3 || s[0] != 2 || s[1] != s[2] {
        return Err(FrequencyError::PatchShape(s.to_vec()));
    }
    if s[1] < 2 {
        return Err(FrequencyError::PatchTooSmall(s[1]));
    }
    Ok(s[1])
}

/// Source coordinate and blend weight for each of the 8 output positions,
/// using pixel centers: `src = (dst + ½)·(r/8) − ½`, clamped to the input.
fn sample_grid(r: usize) -> [(usize, usize, f64); BLOCK] {
    let scale = r as f64 / BLOCK as f64;
    std::array::from_fn(|d| {
        let src = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (r - 1) as f64);
        let lo = src.floor() as usize;
        let hi = (lo + 1).min(r - 1);
        (lo, hi, src - lo as f64)
    })
}

/// Bilinear resize of a `2×r×r` patch to `2×8×8`.
pub fn bilinear_resize(patch: &Tensor) -> Result<Tensor, FrequencyError> {
    let r = check_patch(patch)?;
    let grid = sample_grid(r);
    let src = patch.data();
    let mut out = Vec::with_capacity(DCT_LEN);
    for c in 0..2 {
        let plane = &src[c * r * r..(c + 1) * r * r];
        for &(y0, y1, fy) in &grid {
            for &(x0, x1, fx) in &grid {
                let top = plane[y0 * r + x0] * (1.0 - fx) + plane[y0 * r + x1] * fx;
                let bottom = plane[y1 * r + x0] * (1.0 - fx) + plane[y1 * r + x1] * fx;
                out.push(top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    Ok(Tensor::new(&[2, BLOCK, BLOCK], out).expect("2×8×8"))
}

/// `basis[u][x] = α(u) cos((2x + 1) u π / 16)`.
fn basis() -> &'static [[f64; BLOCK]; BLOCK] {
    static BASIS: OnceLock<[[f64; BLOCK]; BLOCK]> = OnceLock::new();
    BASIS.get_or_init(|| {
        std::array::from_fn(|u| {
            let alpha = if u == 0 { (1.0 / BLOCK as f64).sqrt() } else { (2.0 / BLOCK as f64).sqrt() };
            std::array::from_fn(|x| alpha * ((2 * x + 1) as f64 * u as f64 * PI / (2 * BLOCK) as f64).cos())
        })
    })
}

/// Orthonormal 2-D DCT-II of one 8×8 block (row-major in, row-major out),
/// computed separably: rows first, then columns.
pub fn dct2_8x8(block: &[f64; 64]) -> [f64; 64] {
    let b = basis();
    let mut tmp = [0.0; 64];
    for x in 0..BLOCK {
        for v in 0..BLOCK {
            tmp[x * BLOCK + v] = (0..BLOCK).map(|y| b[v][y] * block[x * BLOCK + y]).sum();
        }
    }
    let mut out = [0.0; 64];
    for u in 0..BLOCK {
        for v in 0..BLOCK {
            out[u * BLOCK + v] = (0..BLOCK).map(|x| b[u][x] * tmp[x * BLOCK + v]).sum();
        }
    }
    out
}

/// Inverse of [`dct2_8x8`] (the DCT-III with the same normalization).
pub fn idct2_8x8(coeffs: &[f64; 64]) -> [f64; 64] {
    let b = basis();
    let mut tmp = [0.0; 64];
    for u in 0..BLOCK {
        for y in 0..BLOCK {
            tmp[u * BLOCK + y] = (0..BLOCK).map(|v| b[v][y] * coeffs[u * BLOCK + v]).sum();
        }
    }
    let mut out = [0.0; 64];
    for x in 0..BLOCK {
        for y in 0..BLOCK {
            out[x * BLOCK + y] = (0..BLOCK).map(|u| b[u][x] * tmp[u * BLOCK + y]).sum();
        }
    }
    out
}

/// Resize, then transform each channel.
pub fn patch_to_dct(patch: &Tensor) -> Result<DctVector, FrequencyError> {
    let resized = bilinear_resize(patch)?;
    let mut coeffs = Vec::with_capacity(DCT_LEN);
    for c in 0..2 {
        let block: &[f64; 64] = resized.data()[c * 64..(c + 1) * 64].try_into().expect("64 values");
        coeffs.extend_from_slice(&dct2_8x8(block));
    }
    Ok(DctVector(coeffs))
}

#[cfg(test)]
mod tests;
