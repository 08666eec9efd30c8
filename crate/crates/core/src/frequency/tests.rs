use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use super::*;
use crate::numerics::Rng;

fn random_block(rng: &mut Rng) -> [f64; 64] {
    std::array::from_fn(|_| rng.uniform_in(-1.0, 1.0))
}

fn random_patch(rng: &mut Rng, r: usize) -> Tensor {
    Tensor::new(&[2, r, r], (0..2 * r * r).map(|_| rng.uniform()).collect()).unwrap()
}

/// Direct O(N⁴) evaluation of the DCT-II definition.
fn dct_oracle(f: &[f64; 64]) -> [f64; 64] {
    let alpha = |k: usize| if k == 0 { (1.0f64 / 8.0).sqrt() } else { (2.0f64 / 8.0).sqrt() };
    std::array::from_fn(|i| {
        let (u, v) = (i / 8, i % 8);
        let mut s = 0.0;
        for x in 0..8 {
            for y in 0..8 {
                s += f[x * 8 + y]
                    * ((2 * x + 1) as f64 * u as f64 * PI / 16.0).cos()
                    * ((2 * y + 1) as f64 * v as f64 * PI / 16.0).cos();
            }
        }
        alpha(u) * alpha(v) * s
    })
}

#[test]
fn constant_block_is_dc_only() {
    let c = dct2_8x8(&[1.0; 64]);
    assert_abs_diff_eq!(c[0], 8.0, epsilon = 1e-12);
    assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn matches_direct_sum_oracle() {
    let mut rng = Rng::new(12);
    for _ in 0..20 {
        let block = random_block(&mut rng);
        for (a, e) in dct2_8x8(&block).iter().zip(dct_oracle(&block)) {
            assert_abs_diff_eq!(*a, e, epsilon = 1e-12);
        }
    }
}

#[test]
fn parseval_and_round_trip() {
    let mut rng = Rng::new(13);
    for _ in 0..20 {
        let block = random_block(&mut rng);
        let c = dct2_8x8(&block);
        let e_space: f64 = block.iter().map(|v| v * v).sum();
        let e_freq: f64 = c.iter().map(|v| v * v).sum();
        assert_abs_diff_eq!(e_space, e_freq, epsilon = 1e-10);
        for (a, b) in idct2_8x8(&c).iter().zip(&block) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }
}

proptest! {
    #[test]
    fn dct_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut rng = Rng::new(seed);
        let x = random_block(&mut rng);
        let y = random_block(&mut rng);
        let mix: [f64; 64] = std::array::from_fn(|i| a * x[i] + b * y[i]);
        let (dx, dy, dm) = (dct2_8x8(&x), dct2_8x8(&y), dct2_8x8(&mix));
        for i in 0..64 {
            prop_assert!((dm[i] - (a * dx[i] + b * dy[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn vector_length_is_fixed(r in 2usize..20, seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let v = patch_to_dct(&random_patch(&mut rng, r)).unwrap();
        prop_assert_eq!(v.coeffs().len(), DCT_LEN);
        prop_assert!(v.coeffs().iter().all(|c| c.is_finite()));
    }
}

#[test]
fn resize_identity_at_eight() {
    let mut rng = Rng::new(14);
    let p = random_patch(&mut rng, 8);
    assert_eq!(bilinear_resize(&p).unwrap().data(), p.data());
}

#[test]
fn resize_preserves_constants() {
    for r in [3, 5, 7, 11, 15] {
        let p = Tensor::filled(&[2, r, r], 0.37);
        assert!(bilinear_resize(&p).unwrap().data().iter().all(|v| (v - 0.37).abs() < 1e-15));
    }
}

/// Hand-evaluated four-neighbour sums on the ramp p(i, j) = i for r = 7.
#[test]
fn resize_row_ramp_r7() {
    let r = 7;
    let p = Tensor::new(&[2, r, r], (0..2 * r * r).map(|k| ((k % (r * r)) / r) as f64).collect()).unwrap();
    let out = bilinear_resize(&p).unwrap();
    for dst in 0..8 {
        let src = ((dst as f64 + 0.5) * 7.0 / 8.0 - 0.5).clamp(0.0, 6.0);
        let (y0, fy) = (src.floor(), src - src.floor());
        let y1 = (y0 + 1.0).min(6.0);
        // Each corner value equals its row index, so the column weights
        // (summing to one) collapse.
        let expected = y0 * (1.0 - fy) + y1 * fy;
        for x in 0..8 {
            for c in 0..2 {
                assert_abs_diff_eq!(out.data()[(c * 8 + dst) * 8 + x], expected, epsilon = 1e-14);
            }
        }
    }
    // Spot values: dst 0 -> src -0.0625 clamps to 0; dst 7 -> 6.0625 clamps to 6.
    assert_eq!(out.data()[0], 0.0);
    assert_eq!(out.data()[7 * 8], 6.0);
    assert_abs_diff_eq!(out.data()[8], 0.8125, epsilon = 1e-15);
}

#[test]
fn resize_rejects_bad_shapes() {
    assert!(bilinear_resize(&Tensor::zeros(&[1, 7, 7])).is_err());
    assert!(bilinear_resize(&Tensor::zeros(&[2, 7, 6])).is_err());
    assert_eq!(bilinear_resize(&Tensor::zeros(&[2, 1, 1])), Err(FrequencyError::PatchTooSmall(1)));
}

#[test]
fn patch_to_dct_examples() {
    let z = patch_to_dct(&Tensor::zeros(&[2, 7, 7])).unwrap();
    assert!(z.coeffs().iter().all(|&v| v == 0.0));

    let ones = patch_to_dct(&Tensor::filled(&[2, 8, 8], 1.0)).unwrap();
    for (i, v) in ones.coeffs().iter().enumerate() {
        let expected = if i == 0 || i == 64 { 8.0 } else { 0.0 };
        assert_abs_diff_eq!(*v, expected, epsilon = 1e-12);
    }
}

#[test]
fn patch_to_dct_is_composition() {
    let mut rng = Rng::new(15);
    let p = random_patch(&mut rng, 7);
    let resized = bilinear_resize(&p).unwrap();
    let mut expected = Vec::new();
    for c in 0..2 {
        let block: [f64; 64] = resized.data()[c * 64..(c + 1) * 64].try_into().unwrap();
        expected.extend(dct_oracle(&block));
    }
    for (a, e) in patch_to_dct(&p).unwrap().coeffs().iter().zip(&expected) {
        assert_abs_diff_eq!(a, e, epsilon = 1e-12);
    }
}
