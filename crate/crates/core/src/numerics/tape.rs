//! Reverse-mode differentiation over a recorded sequence of operations.
//!
//! Every op appends a node holding its forward value and enough context to
//! push gradients back to its inputs. Nodes are only ever appended, so the
//! node index is a valid topological order and `backward` is one reverse
//! sweep.

use super::{NumericsError, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Conv2d { input: Var, weight: Var, bias: Var, padding: usize },
    Linear { input: Var, weight: Var, bias: Var },
    Sigmoid(Var),
    Relu(Var),
    Add(Var, Var),
    Mul(Var, Var),
    Mask { input: Var, mask: Vec<f64> },
    SliceChannels { input: Var, start: usize },
    Concat(Vec<Var>),
    Reshape(Var),
    SoftmaxCrossEntropy { logits: Var, label: usize, probs: Vec<f64> },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn dim_err(op: &'static str, axis: &'static str, expected: usize, found: usize) -> NumericsError {
    NumericsError::Dimension { op, axis, expected, found }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Records an input or parameter. Gradients are kept only for leaves
    /// whose tensor has `requires_grad` set.
    pub fn leaf(&mut self, tensor: Tensor) -> Var {
        self.push(tensor, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].value.grad.as_deref()
    }

    pub fn zero_grad(&mut self) {
        for node in &mut self.nodes {
            node.value.zero_grad();
        }
    }

    /// Cross-correlation of a `C_in×H×W` input with `C_out×C_in×k×k`
    /// kernels and zero padding.
    pub fn conv2d(&mut self, input: Var, weight: Var, bias: Var, padding: usize) -> Result<Var, NumericsError> {
        let x = self.value(input);
        let w = self.value(weight);
        let b = self.value(bias);
        if x.ndim() != 3 {
            return Err(dim_err("conv2d", "input rank", 3, x.ndim()));
        }
        if w.ndim() != 4 {
            return Err(dim_err("conv2d", "weight rank", 4, w.ndim()));
        }
        let (c_in, h, wd) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let (c_out, k) = (w.shape()[0], w.shape()[2]);
        if w.shape()[1] != c_in {
            return Err(dim_err("conv2d", "weight input channels", c_in, w.shape()[1]));
        }
        if w.shape()[3] != k {
            return Err(dim_err("conv2d", "kernel width", k, w.shape()[3]));
        }
        if b.numel() != c_out {
            return Err(dim_err("conv2d", "bias length", c_out, b.numel()));
        }
        if h + 2 * padding < k {
            return Err(dim_err("conv2d", "input height", k, h + 2 * padding));
        }
        if wd + 2 * padding < k {
            return Err(dim_err("conv2d", "input width", k, wd + 2 * padding));
        }
        let oh = h + 2 * padding - k + 1;
        let ow = wd + 2 * padding - k + 1;
        let (xd, wdat, bd) = (x.data(), w.data(), b.data());
        let mut out = vec![0.0; c_out * oh * ow];
        for co in 0..c_out {
            let plane = &mut out[co * oh * ow..(co + 1) * oh * ow];
            plane.iter_mut().for_each(|v| *v = bd[co]);
            for ci in 0..c_in {
                let xplane = &xd[ci * h * wd..(ci + 1) * h * wd];
                for dy in 0..k {
                    for dx in 0..k {
                        let wv = wdat[((co * c_in + ci) * k + dy) * k + dx];
                        if wv == 0.0 {
                            continue;
                        }
                        for y in 0..oh {
                            let sy = y + dy;
                            if sy < padding || sy - padding >= h {
                                continue;
                            }
                            let row = &xplane[(sy - padding) * wd..(sy - padding + 1) * wd];
                            let orow = &mut plane[y * ow..(y + 1) * ow];
                            for (xo, o) in orow.iter_mut().enumerate() {
                                let sx = xo + dx;
                                if sx >= padding && sx - padding < wd {
                                    *o += wv * row[sx - padding];
                                }
                            }
                        }
                    }
                }
            }
        }
        let value = Tensor::new(&[c_out, oh, ow], out)?;
        Ok(self.push(value, Op::Conv2d { input, weight, bias, padding }))
    }

    /// `weight · input + bias` for a vector input.
    pub fn linear(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var, NumericsError> {
        let x = self.value(input);
        let w = self.value(weight);
        let b = self.value(bias);
        if w.ndim() != 2 {
            return Err(dim_err("linear", "weight rank", 2, w.ndim()));
        }
        let (m, n) = (w.shape()[0], w.shape()[1]);
        if x.numel() != n {
            return Err(dim_err("linear", "input length", n, x.numel()));
        }
        if b.numel() != m {
            return Err(dim_err("linear", "bias length", m, b.numel()));
        }
        let (xd, wd, bd) = (x.data(), w.data(), b.data());
        let out: Vec<f64> = (0..m)
            .map(|j| {
                let row = &wd[j * n..(j + 1) * n];
                row.iter().zip(xd).map(|(a, b)| a * b).sum::<f64>() + bd[j]
            })
            .collect();
        Ok(self.push(Tensor::from_vec(out), Op::Linear { input, weight, bias }))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let src = self.value(x);
        let data = src.data().iter().map(|&v| sigmoid(v)).collect();
        let value = Tensor::new(src.shape(), data).expect("same shape");
        self.push(value, Op::Sigmoid(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let src = self.value(x);
        let data = src.data().iter().map(|&v| v.max(0.0)).collect();
        let value = Tensor::new(src.shape(), data).expect("same shape");
        self.push(value, Op::Relu(x))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        let data = self.zip_same("add", a, b, |x, y| x + y)?;
        let value = Tensor::new(self.value(a).shape(), data)?;
        Ok(self.push(value, Op::Add(a, b)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        let data = self.zip_same("mul", a, b, |x, y| x * y)?;
        let value = Tensor::new(self.value(a).shape(), data)?;
        Ok(self.push(value, Op::Mul(a, b)))
    }

    fn zip_same(
        &self,
        op: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Vec<f64>, NumericsError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(dim_err(op, "operand length", ta.numel(), tb.numel()));
        }
        Ok(ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect())
    }

    /// Multiplies by a constant 0/1 (or arbitrary) mask of the same length.
    pub fn mask(&mut self, x: Var, mask: Vec<f64>) -> Result<Var, NumericsError> {
        let src = self.value(x);
        if mask.len() != src.numel() {
            return Err(dim_err("mask", "mask length", src.numel(), mask.len()));
        }
        let data = src.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        let value = Tensor::new(src.shape(), data)?;
        Ok(self.push(value, Op::Mask { input: x, mask }))
    }

    /// Channels `start..start + count` of a `C×H×W` tensor.
    pub fn slice_channels(&mut self, x: Var, start: usize, count: usize) -> Result<Var, NumericsError> {
        let src = self.value(x);
        if src.ndim() != 3 {
            return Err(dim_err("slice_channels", "input rank", 3, src.ndim()));
        }
        let (c, h, w) = (src.shape()[0], src.shape()[1], src.shape()[2]);
        if count == 0 || start + count > c {
            return Err(dim_err("slice_channels", "channel", c, start + count));
        }
        let plane = h * w;
        let data = src.data()[start * plane..(start + count) * plane].to_vec();
        let value = Tensor::new(&[count, h, w], data)?;
        Ok(self.push(value, Op::SliceChannels { input: x, start }))
    }

    /// Flattens each operand and joins them into one vector.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, NumericsError> {
        if parts.is_empty() {
            return Err(NumericsError::Contract("concat of zero tensors".into()));
        }
        let mut data = Vec::new();
        for &p in parts {
            data.extend_from_slice(self.value(p).data());
        }
        Ok(self.push(Tensor::from_vec(data), Op::Concat(parts.to_vec())))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var, NumericsError> {
        let mut value = self.value(x).clone();
        value.requires_grad = false;
        value.grad = None;
        let value = value.reshape(shape)?;
        Ok(self.push(value, Op::Reshape(x)))
    }

    pub fn flatten(&mut self, x: Var) -> Var {
        let n = self.value(x).numel();
        self.reshape(x, &[n]).expect("numel preserved")
    }

    /// Softmax followed by negative log-likelihood of `label`, as a scalar.
    pub fn softmax_cross_entropy(&mut self, logits: Var, label: usize) -> Result<Var, NumericsError> {
        let z = self.value(logits).data();
        if label >= z.len() {
            return Err(NumericsError::LabelOutOfRange { label, classes: z.len() });
        }
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = z.iter().map(|v| (v - max).exp()).sum();
        let log_sum = max + sum.ln();
        let probs: Vec<f64> = z.iter().map(|v| (v - log_sum).exp()).collect();
        let loss = log_sum - z[label];
        Ok(self.push(Tensor::scalar(loss), Op::SoftmaxCrossEntropy { logits, label, probs }))
    }

    /// Propagates d(loss)/d(node) to every leaf that requires a gradient,
    /// adding onto whatever those leaves already hold.
    pub fn backward(&mut self, loss: Var) -> Result<(), NumericsError> {
        if self.value(loss).numel() != 1 {
            return Err(NumericsError::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {
                    grads[idx] = Some(g);
                }
                Op::Conv2d { input, weight, bias, padding } => {
                    let (gi, gw, gb) = self.conv2d_backward(*input, *weight, &g, *padding, node.value.shape());
                    add_into(&mut grads, *input, &gi);
                    add_into(&mut grads, *weight, &gw);
                    add_into(&mut grads, *bias, &gb);
                }
                Op::Linear { input, weight, bias } => {
                    let x = self.value(*input).data();
                    let w = self.value(*weight).data();
                    let n = x.len();
                    let mut gi = vec![0.0; n];
                    let mut gw = vec![0.0; w.len()];
                    for (j, &gj) in g.iter().enumerate() {
                        let row = &w[j * n..(j + 1) * n];
                        for k in 0..n {
                            gi[k] += row[k] * gj;
                        }
                        for (gwk, &xk) in gw[j * n..(j + 1) * n].iter_mut().zip(x) {
                            *gwk = xk * gj;
                        }
                    }
                    add_into(&mut grads, *input, &gi);
                    add_into(&mut grads, *weight, &gw);
                    add_into(&mut grads, *bias, &g);
                }
                Op::Sigmoid(x) => {
                    let y = node.value.data();
                    let gx: Vec<f64> = g.iter().zip(y).map(|(g, y)| g * y * (1.0 - y)).collect();
                    add_into(&mut grads, *x, &gx);
                }
                Op::Relu(x) => {
                    let src = self.value(*x).data();
                    let gx: Vec<f64> = g.iter().zip(src).map(|(&g, &v)| if v > 0.0 { g } else { 0.0 }).collect();
                    add_into(&mut grads, *x, &gx);
                }
                Op::Add(a, b) => {
                    add_into(&mut grads, *a, &g);
                    add_into(&mut grads, *b, &g);
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.value(*a).data(), self.value(*b).data());
                    let ga: Vec<f64> = g.iter().zip(vb).map(|(g, v)| g * v).collect();
                    let gb: Vec<f64> = g.iter().zip(va).map(|(g, v)| g * v).collect();
                    add_into(&mut grads, *a, &ga);
                    add_into(&mut grads, *b, &gb);
                }
                Op::Mask { input, mask } => {
                    let gx: Vec<f64> = g.iter().zip(mask).map(|(g, m)| g * m).collect();
                    add_into(&mut grads, *input, &gx);
                }
                Op::SliceChannels { input, start } => {
                    let src = self.value(*input);
                    let plane = src.shape()[1] * src.shape()[2];
                    let mut gx = vec![0.0; src.numel()];
                    gx[start * plane..start * plane + g.len()].copy_from_slice(&g);
                    add_into(&mut grads, *input, &gx);
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let n = self.value(p).numel();
                        add_into(&mut grads, p, &g[offset..offset + n]);
                        offset += n;
                    }
                }
                Op::Reshape(x) => add_into(&mut grads, *x, &g),
                Op::SoftmaxCrossEntropy { logits, label, probs } => {
                    let mut gx: Vec<f64> = probs.iter().map(|p| p * g[0]).collect();
                    gx[*label] -= g[0];
                    add_into(&mut grads, *logits, &gx);
                }
            }
        }

        for (node, g) in self.nodes.iter_mut().zip(grads) {
            if let (true, Some(g)) = (node.value.requires_grad, g) {
                node.value.accumulate_grad(&g);
            }
        }
        Ok(())
    }

    fn conv2d_backward(
        &self,
        input: Var,
        weight: Var,
        g: &[f64],
        padding: usize,
        out_shape: &[usize],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let x = self.value(input);
        let w = self.value(weight);
        let (c_in, h, wd) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let (c_out, k) = (w.shape()[0], w.shape()[2]);
        let (oh, ow) = (out_shape[1], out_shape[2]);
        let (xd, wdat) = (x.data(), w.data());
        let mut gi = vec![0.0; xd.len()];
        let mut gw = vec![0.0; wdat.len()];
        let mut gb = vec![0.0; c_out];
        for co in 0..c_out {
            let gplane = &g[co * oh * ow..(co + 1) * oh * ow];
            gb[co] = gplane.iter().sum();
            for ci in 0..c_in {
                let xbase = ci * h * wd;
                for dy in 0..k {
                    for dx in 0..k {
                        let widx = ((co * c_in + ci) * k + dy) * k + dx;
                        let wv = wdat[widx];
                        let mut acc = 0.0;
                        for y in 0..oh {
                            let sy = y + dy;
                            if sy < padding || sy - padding >= h {
                                continue;
                            }
                            let rbase = xbase + (sy - padding) * wd;
                            for xo in 0..ow {
                                let sx = xo + dx;
                                if sx < padding || sx - padding >= wd {
                                    continue;
                                }
                                let gv = gplane[y * ow + xo];
                                let xi = rbase + sx - padding;
                                acc += xd[xi] * gv;
                                gi[xi] += wv * gv;
                            }
                        }
                        gw[widx] = acc;
                    }
                }
            }
        }
        (gi, gw, gb)
    }
}

fn add_into(grads: &mut [Option<Vec<f64>>], v: Var, delta: &[f64]) {
    match &mut grads[v.0] {
        Some(g) => g.iter_mut().zip(delta).for_each(|(a, b)| *a += b),
        slot @ None => *slot = Some(delta.to_vec()),
    }
}

/// Logistic function, evaluated without overflow for large |x|.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
