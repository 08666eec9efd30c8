use approx::assert_abs_diff_eq;

use super::*;

fn random_tensor(rng: &mut Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect()).unwrap()
}

/// Six nested loops straight from the definition of cross-correlation.
fn conv_oracle(x: &Tensor, w: &Tensor, b: &Tensor, pad: usize) -> Vec<f64> {
    let (ci_n, h, wd) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (co_n, k) = (w.shape()[0], w.shape()[2]);
    let (oh, ow) = (h + 2 * pad - k + 1, wd + 2 * pad - k + 1);
    let mut out = vec![0.0; co_n * oh * ow];
    for co in 0..co_n {
        for y in 0..oh {
            for xo in 0..ow {
                let mut s = b.data()[co];
                for ci in 0..ci_n {
                    for dy in 0..k {
                        for dx in 0..k {
                            let sy = y as isize + dy as isize - pad as isize;
                            let sx = xo as isize + dx as isize - pad as isize;
                            if sy < 0 || sx < 0 || sy >= h as isize || sx >= wd as isize {
                                continue;
                            }
                            s += w.data()[((co * ci_n + ci) * k + dy) * k + dx]
                                * x.data()[(ci * h + sy as usize) * wd + sx as usize];
                        }
                    }
                }
                out[(co * oh + y) * ow + xo] = s;
            }
        }
    }
    out
}

#[test]
fn conv_identity_scaled_kernel() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::filled(&[1, 3, 3], 1.0));
    let w = t.leaf(Tensor::filled(&[1, 1, 1, 1], 2.0));
    let b = t.leaf(Tensor::zeros(&[1]));
    let y = t.conv2d(x, w, b, 0).unwrap();
    assert_eq!(t.value(y).shape(), &[1, 3, 3]);
    assert!(t.value(y).data().iter().all(|&v| v == 2.0));
}

#[test]
fn conv_zero_kernel_gives_bias() {
    let mut rng = Rng::new(11);
    let mut t = Tape::new();
    let x = t.leaf(random_tensor(&mut rng, &[2, 4, 4]));
    let w = t.leaf(Tensor::zeros(&[3, 2, 3, 3]));
    let b = t.leaf(Tensor::from_vec(vec![0.5, -1.0, 2.0]));
    let y = t.conv2d(x, w, b, 1).unwrap();
    for (c, &bias) in [0.5, -1.0, 2.0].iter().enumerate() {
        assert!(t.value(y).data()[c * 16..(c + 1) * 16].iter().all(|&v| v == bias));
    }
}

#[test]
fn conv_matches_loop_oracle() {
    let mut rng = Rng::new(5);
    let x = random_tensor(&mut rng, &[2, 5, 5]);
    let w = random_tensor(&mut rng, &[3, 2, 3, 3]);
    let b = random_tensor(&mut rng, &[3]);
    let expected = conv_oracle(&x, &w, &b, 1);
    let mut t = Tape::new();
    let (xv, wv, bv) = (t.leaf(x), t.leaf(w), t.leaf(b));
    let y = t.conv2d(xv, wv, bv, 1).unwrap();
    assert_eq!(t.value(y).shape(), &[3, 5, 5]);
    for (a, e) in t.value(y).data().iter().zip(&expected) {
        assert_abs_diff_eq!(a, e, epsilon = 1e-12);
    }
}

#[test]
fn conv_shape_errors_name_axis() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::zeros(&[2, 5, 5]));
    let w = t.leaf(Tensor::zeros(&[3, 4, 3, 3]));
    let b = t.leaf(Tensor::zeros(&[3]));
    let err = t.conv2d(x, w, b, 1).unwrap_err();
    assert!(err.to_string().contains("weight input channels"), "{err}");

    let w = t.leaf(Tensor::zeros(&[3, 2, 3, 3]));
    let b = t.leaf(Tensor::zeros(&[2]));
    let err = t.conv2d(x, w, b, 1).unwrap_err();
    assert!(err.to_string().contains("bias length"), "{err}");
}

#[test]
fn conv1x1_equals_per_pixel_linear() {
    let mut rng = Rng::new(8);
    let x = random_tensor(&mut rng, &[4, 3, 3]);
    let w = random_tensor(&mut rng, &[6, 4, 1, 1]);
    let b = random_tensor(&mut rng, &[6]);
    let mut t = Tape::new();
    let (xv, wv, bv) = (t.leaf(x.clone()), t.leaf(w.clone()), t.leaf(b.clone()));
    let y = t.conv2d(xv, wv, bv, 0).unwrap();
    let conv = t.value(y).data().to_vec();

    let wmat = t.leaf(w.reshape(&[6, 4]).unwrap());
    for p in 0..9 {
        let pixel: Vec<f64> = (0..4).map(|c| x.data()[c * 9 + p]).collect();
        let pv = t.leaf(Tensor::from_vec(pixel));
        let out = t.linear(pv, wmat, bv).unwrap();
        for c in 0..6 {
            assert_abs_diff_eq!(t.value(out).data()[c], conv[c * 9 + p], epsilon = 1e-14);
        }
    }
}

#[test]
fn linear_examples() {
    let mut t = Tape::new();
    let eye = t.leaf(Tensor::new(&[3, 3], vec![1., 0., 0., 0., 1., 0., 0., 0., 1.]).unwrap());
    let zero = t.leaf(Tensor::zeros(&[3]));
    let x = t.leaf(Tensor::from_vec(vec![1.0, 2.0, 3.0]));
    let y = t.linear(x, eye, zero).unwrap();
    assert_eq!(t.value(y).data(), &[1.0, 2.0, 3.0]);

    let w = t.leaf(Tensor::zeros(&[2, 3]));
    let b = t.leaf(Tensor::from_vec(vec![5.0, -5.0]));
    let y = t.linear(x, w, b).unwrap();
    assert_eq!(t.value(y).data(), &[5.0, -5.0]);

    let bad = t.leaf(Tensor::zeros(&[4]));
    assert!(matches!(t.linear(bad, w, b), Err(NumericsError::Dimension { .. })));
}

#[test]
fn linear_matches_dot_oracle() {
    let mut rng = Rng::new(9);
    let w = random_tensor(&mut rng, &[4, 7]);
    let b = random_tensor(&mut rng, &[4]);
    let x = random_tensor(&mut rng, &[7]);
    let mut expected = vec![0.0; 4];
    for j in 0..4 {
        expected[j] = b.data()[j];
        for k in 0..7 {
            expected[j] += w.data()[j * 7 + k] * x.data()[k];
        }
    }
    let mut t = Tape::new();
    let (wv, bv, xv) = (t.leaf(w), t.leaf(b), t.leaf(x));
    let y = t.linear(xv, wv, bv).unwrap();
    for (a, e) in t.value(y).data().iter().zip(&expected) {
        assert_abs_diff_eq!(a, e, epsilon = 1e-12);
    }
}

#[test]
fn sigmoid_examples() {
    assert_eq!(sigmoid(0.0), 0.5);
    let tiny = sigmoid(-50.0);
    assert!(tiny > 0.0 && tiny < 1e-20);
    assert!(sigmoid(-1000.0).is_finite());
    assert_abs_diff_eq!(sigmoid(3f64.ln()), 0.75, epsilon = 1e-15);
}

#[test]
fn relu_examples() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::from_vec(vec![-1.0, 0.0, 2.0]));
    let y = t.relu(x);
    assert_eq!(t.value(y).data(), &[0.0, 0.0, 2.0]);

    let mut rng = Rng::new(2);
    let r = random_tensor(&mut rng, &[5, 5]);
    let x = t.leaf(r.clone());
    let y = t.relu(x);
    for (a, v) in t.value(y).data().iter().zip(r.data()) {
        assert_eq!(*a, if *v > 0.0 { *v } else { 0.0 });
    }
}

#[test]
fn relu_subgradient_at_zero_is_zero() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::from_vec(vec![0.0, 1.0]).with_grad());
    let y = t.relu(x);
    let w = t.leaf(Tensor::new(&[1, 2], vec![1.0, 1.0]).unwrap());
    let b = t.leaf(Tensor::zeros(&[1]));
    let s = t.linear(y, w, b).unwrap();
    t.backward(s).unwrap();
    assert_eq!(t.grad(x).unwrap(), &[0.0, 1.0]);
}

#[test]
fn softmax_cross_entropy_examples() {
    let mut t = Tape::new();
    let z = t.leaf(Tensor::from_vec(vec![0.0, 0.0]));
    let l = t.softmax_cross_entropy(z, 0).unwrap();
    assert_abs_diff_eq!(t.value(l).data()[0], 2f64.ln(), epsilon = 1e-15);

    let z = t.leaf(Tensor::from_vec(vec![1000.0, 0.0]));
    let l = t.softmax_cross_entropy(z, 0).unwrap();
    let v = t.value(l).data()[0];
    assert!(v.is_finite() && v.abs() < 1e-12);

    let z = t.leaf(Tensor::from_vec(vec![1.0, -1.0]));
    let l = t.softmax_cross_entropy(z, 1).unwrap();
    let closed = -((-1f64).exp() / (1f64.exp() + (-1f64).exp())).ln();
    assert_abs_diff_eq!(t.value(l).data()[0], closed, epsilon = 1e-14);
    assert_abs_diff_eq!(closed, 2.0 + (1.0 + (-2f64).exp()).ln(), epsilon = 1e-14);
    assert_abs_diff_eq!(closed, 2.1269, epsilon = 1e-4);

    assert_eq!(t.softmax_cross_entropy(z, 2).unwrap_err(), NumericsError::LabelOutOfRange { label: 2, classes: 2 });
}

#[test]
fn softmax_gradient_is_probs_minus_onehot() {
    let mut t = Tape::new();
    let z = t.leaf(Tensor::from_vec(vec![0.3, -0.2]).with_grad());
    let l = t.softmax_cross_entropy(z, 1).unwrap();
    t.backward(l).unwrap();
    let e0 = 0.3f64.exp();
    let e1 = (-0.2f64).exp();
    let p0 = e0 / (e0 + e1);
    let g = t.grad(z).unwrap();
    assert_abs_diff_eq!(g[0], p0, epsilon = 1e-15);
    assert_abs_diff_eq!(g[1], (1.0 - p0) - 1.0, epsilon = 1e-15);
}

#[test]
fn backward_rejects_non_scalar() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::from_vec(vec![1.0, 2.0]).with_grad());
    let y = t.relu(x);
    assert!(matches!(t.backward(y), Err(NumericsError::Contract(_))));
}

#[test]
fn repeated_backward_accumulates() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::from_vec(vec![0.5, 1.5]).with_grad());
    let z = t.sigmoid(x);
    let l = t.softmax_cross_entropy(z, 0).unwrap();
    t.backward(l).unwrap();
    let once = t.grad(x).unwrap().to_vec();
    t.backward(l).unwrap();
    let twice = t.grad(x).unwrap();
    for (a, b) in once.iter().zip(twice) {
        assert_abs_diff_eq!(2.0 * a, *b, epsilon = 1e-15);
    }
    t.zero_grad();
    assert!(t.grad(x).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn leaves_without_requires_grad_get_none() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::from_vec(vec![0.5, 1.5]));
    let l = t.softmax_cross_entropy(x, 0).unwrap();
    t.backward(l).unwrap();
    assert!(t.grad(x).is_none());
}

#[test]
fn slice_mask_concat_forward() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::new(&[3, 1, 2], vec![1., 2., 3., 4., 5., 6.]).unwrap());
    let s = t.slice_channels(x, 1, 2).unwrap();
    assert_eq!(t.value(s).data(), &[3., 4., 5., 6.]);
    let m = t.mask(s, vec![1., 0., 0., 1.]).unwrap();
    assert_eq!(t.value(m).data(), &[3., 0., 0., 6.]);
    let c = t.concat(&[m, x]).unwrap();
    assert_eq!(t.value(c).shape(), &[10]);
    assert!(t.slice_channels(x, 2, 2).is_err());
}
