use alloc::vec;
use alloc::vec::Vec;

use super::tensor::{axpy, dot, Tensor1D};
use crate::error::{Error, Result};
use crate::math;

/// Handle to a node recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    LeakyRelu(f64),
    Tanh,
    Sigmoid,
}

impl Activation {
    /// Slope used for the generator's leaky units.
    pub const LEAKY_SLOPE: f64 = 0.2;

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(a) => {
                if x > 0.0 {
                    x
                } else {
                    a * x
                }
            }
            Activation::Tanh => math::tanh(x),
            Activation::Sigmoid => math::sigmoid(x),
        }
    }

    /// Local derivative given the input and the output.
    #[inline]
    pub fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(a) => {
                if x > 0.0 {
                    1.0
                } else {
                    a
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}

/// Batch-norm statistics source.
#[derive(Debug, Clone, PartialEq)]
pub enum BnMode {
    /// Normalize with the statistics of the input itself (over its length).
    Train,
    /// Normalize with fixed per-channel statistics.
    Eval { mean: Vec<f64>, var: Vec<f64> },
}

#[derive(Debug)]
enum Op {
    Leaf,
    ConvTranspose {
        input: Var,
        kernel: Var,
        stride: usize,
        padding: usize,
    },
    Conv {
        input: Var,
        kernel: Var,
        stride: usize,
        padding: usize,
    },
    BatchNorm {
        input: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
        train: bool,
    },
    Activation {
        input: Var,
        kind: Activation,
    },
    Linear {
        weight: Var,
        input: Var,
        bias: Option<Var>,
    },
    Add(Var, Var),
    Scale(Var, f64),
    GruCombine {
        gx: Var,
        gh: Var,
        h_prev: Var,
        // update gate, reset gate, candidate
        z: Vec<f64>,
        r: Vec<f64>,
        n: Vec<f64>,
    },
    Concat(Vec<Var>),
    Crop {
        input: Var,
        len: usize,
    },
    Mse {
        pred: Var,
        target: Var,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor1D,
    op: Op,
    requires_grad: bool,
}

/// Records tensor operations for one forward pass so that [`Tape::backward`]
/// can propagate gradients to every leaf created with [`Tape::param`].
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients returned by [`Tape::backward`], indexed by the leaf handles.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    /// Gradient with respect to `v`; all zeros when the loss does not depend
    /// on it.
    pub fn wrt(&self, v: Var) -> Tensor1D {
        let (c, l) = self.shapes[v.0];
        match &self.grads[v.0] {
            Some(g) => Tensor1D {
                channels: c,
                length: l,
                values: g.clone(),
            },
            None => Tensor1D::zeros(c, l),
        }
    }

    pub fn collect(&self, vars: &[Var]) -> Vec<Tensor1D> {
        vars.iter().map(|v| self.wrt(*v)).collect()
    }
}

fn shape_err(op: &'static str, a: (usize, usize), b: (usize, usize)) -> Error {
    Error::Shape {
        op,
        left: a,
        right: b,
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor1D {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor1D, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    /// A trainable leaf.
    pub fn param(&mut self, value: Tensor1D) -> Var {
        self.push(value, Op::Leaf, true)
    }

    pub fn params(&mut self, values: &[Tensor1D]) -> Vec<Var> {
        values.iter().map(|t| self.param(t.clone())).collect()
    }

    /// A leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor1D) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Transposed 1-D convolution. `kernel` is `(in · out) × k`; the output
    /// length is `(L_in − 1)·stride − 2·padding + k`.
    pub fn conv_transpose_1d(
        &mut self,
        input: Var,
        kernel: Var,
        out_channels: usize,
        stride: usize,
        padding: usize,
    ) -> Result<Var> {
        let (cin, lin) = self.shape(input);
        let (kc, k) = self.shape(kernel);
        if stride == 0 || out_channels == 0 || kc != cin * out_channels || k == 0 {
            return Err(shape_err("conv_transpose_1d", (cin, lin), (kc, k)));
        }
        let full = (lin.saturating_sub(1)) * stride + k;
        if lin == 0 || full <= 2 * padding {
            return Err(shape_err("conv_transpose_1d", (cin, lin), (kc, k)));
        }
        let lout = full - 2 * padding;
        let x = &self.nodes[input.0].value;
        let w = &self.nodes[kernel.0].value;
        let mut y = Tensor1D::zeros(out_channels, lout);
        let mut acc = vec![0.0; k * lin];
        for co in 0..out_channels {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for ci in 0..cin {
                let xr = x.row(ci);
                let wr = w.row(ci * out_channels + co);
                for (kk, wv) in wr.iter().enumerate() {
                    axpy(&mut acc[kk * lin..(kk + 1) * lin], *wv, xr);
                }
            }
            let yr = y.row_mut(co);
            for kk in 0..k {
                let a = &acc[kk * lin..(kk + 1) * lin];
                for (i, av) in a.iter().enumerate() {
                    let j = i * stride + kk;
                    if j >= padding && j - padding < lout {
                        yr[j - padding] += av;
                    }
                }
            }
        }
        let rg = self.needs(input) || self.needs(kernel);
        Ok(self.push(
            y,
            Op::ConvTranspose {
                input,
                kernel,
                stride,
                padding,
            },
            rg,
        ))
    }

    /// Strided 1-D convolution, the adjoint of [`Tape::conv_transpose_1d`] for
    /// the same kernel buffer: `kernel` is `(out · in) × k` here.
    pub fn conv_1d(
        &mut self,
        input: Var,
        kernel: Var,
        out_channels: usize,
        stride: usize,
        padding: usize,
    ) -> Result<Var> {
        let (cin, lin) = self.shape(input);
        let (kc, k) = self.shape(kernel);
        if stride == 0 || out_channels == 0 || kc != cin * out_channels || k == 0 {
            return Err(shape_err("conv_1d", (cin, lin), (kc, k)));
        }
        if lin + 2 * padding < k {
            return Err(shape_err("conv_1d", (cin, lin), (kc, k)));
        }
        let lout = (lin + 2 * padding - k) / stride + 1;
        let x = &self.nodes[input.0].value;
        let w = &self.nodes[kernel.0].value;
        let mut y = Tensor1D::zeros(out_channels, lout);
        let mut gathered = vec![0.0; lout];
        for ci in 0..cin {
            let xr = x.row(ci);
            for kk in 0..k {
                gather(xr, &mut gathered, stride, kk, padding);
                for co in 0..out_channels {
                    let wv = w.values[(co * cin + ci) * k + kk];
                    axpy(y.row_mut(co), wv, &gathered);
                }
            }
        }
        let rg = self.needs(input) || self.needs(kernel);
        Ok(self.push(
            y,
            Op::Conv {
                input,
                kernel,
                stride,
                padding,
            },
            rg,
        ))
    }

    /// Per-channel normalization over the length dimension followed by the
    /// affine map `gamma · x̂ + beta`. `gamma` and `beta` are `C × 1`.
    pub fn batch_norm_1d(
        &mut self,
        input: Var,
        gamma: Var,
        beta: Var,
        eps: f64,
        mode: &BnMode,
    ) -> Result<Var> {
        if !(eps > 0.0) {
            return Err(Error::domain("batch norm eps must be positive"));
        }
        let (c, l) = self.shape(input);
        for v in [gamma, beta] {
            if self.shape(v) != (c, 1) {
                return Err(shape_err("batch_norm_1d", (c, l), self.shape(v)));
            }
        }
        if let BnMode::Eval { mean, var } = mode {
            if mean.len() != c || var.len() != c {
                return Err(shape_err("batch_norm_1d", (c, l), (mean.len(), var.len())));
            }
        }
        let x = &self.nodes[input.0].value;
        let g = &self.nodes[gamma.0].value.values;
        let b = &self.nodes[beta.0].value.values;
        let mut xhat = vec![0.0; c * l];
        let mut inv_std = vec![0.0; c];
        let mut y = Tensor1D::zeros(c, l);
        for ch in 0..c {
            let row = x.row(ch);
            let (m, v) = match mode {
                BnMode::Train => {
                    let m = row.iter().sum::<f64>() / l as f64;
                    let v = row.iter().map(|t| (t - m) * (t - m)).sum::<f64>() / l as f64;
                    (m, v)
                }
                BnMode::Eval { mean, var } => (mean[ch], var[ch]),
            };
            let inv = 1.0 / math::sqrt(v + eps);
            inv_std[ch] = inv;
            let xh = &mut xhat[ch * l..(ch + 1) * l];
            let yr = &mut y.values[ch * l..(ch + 1) * l];
            for i in 0..l {
                xh[i] = (row[i] - m) * inv;
                yr[i] = g[ch] * xh[i] + b[ch];
            }
        }
        let rg = self.needs(input) || self.needs(gamma) || self.needs(beta);
        Ok(self.push(
            y,
            Op::BatchNorm {
                input,
                gamma,
                beta,
                xhat,
                inv_std,
                train: matches!(mode, BnMode::Train),
            },
            rg,
        ))
    }

    pub fn activation(&mut self, input: Var, kind: Activation) -> Var {
        let x = &self.nodes[input.0].value;
        let y = Tensor1D {
            channels: x.channels,
            length: x.length,
            values: x.values.iter().map(|v| kind.apply(*v)).collect(),
        };
        let rg = self.needs(input);
        self.push(y, Op::Activation { input, kind }, rg)
    }

    /// `weight · input (+ bias)`, applied independently to every column of
    /// `input`. `weight` is `out × in`, `input` is `in × L`, `bias` `out × 1`.
    pub fn linear(&mut self, weight: Var, input: Var, bias: Option<Var>) -> Result<Var> {
        let (o, i) = self.shape(weight);
        let (ic, l) = self.shape(input);
        if ic != i {
            return Err(shape_err("linear", (o, i), (ic, l)));
        }
        if let Some(b) = bias {
            if self.shape(b) != (o, 1) {
                return Err(shape_err("linear bias", (o, 1), self.shape(b)));
            }
        }
        let w = &self.nodes[weight.0].value;
        let x = &self.nodes[input.0].value;
        let mut y = Tensor1D::zeros(o, l);
        if l == 1 {
            for r in 0..o {
                y.values[r] = dot(w.row(r), &x.values);
            }
        } else {
            for r in 0..o {
                let wr = w.row(r);
                let yr = &mut y.values[r * l..(r + 1) * l];
                for (c, wv) in wr.iter().enumerate() {
                    axpy(yr, *wv, x.row(c));
                }
            }
        }
        if let Some(b) = bias {
            let bv = &self.nodes[b.0].value.values;
            for r in 0..o {
                y.values[r * l..(r + 1) * l]
                    .iter_mut()
                    .for_each(|t| *t += bv[r]);
            }
        }
        let rg = self.needs(weight) || self.needs(input) || bias.is_some_and(|b| self.needs(b));
        Ok(self.push(
            y,
            Op::Linear {
                weight,
                input,
                bias,
            },
            rg,
        ))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err("add", self.shape(a), self.shape(b)));
        }
        let x = &self.nodes[a.0].value;
        let y = &self.nodes[b.0].value;
        let out = Tensor1D {
            channels: x.channels,
            length: x.length,
            values: x.values.iter().zip(&y.values).map(|(p, q)| p + q).collect(),
        };
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::Add(a, b), rg))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let x = &self.nodes[a.0].value;
        let out = Tensor1D {
            channels: x.channels,
            length: x.length,
            values: x.values.iter().map(|v| c * v).collect(),
        };
        let rg = self.needs(a);
        self.push(out, Op::Scale(a, c), rg)
    }

    /// GRU state update from precomputed gate pre-activations.
    ///
    /// `gx` and `gh` are `3N × 1` columns holding the input and hidden
    /// contributions for (update, reset, candidate), in that order:
    ///
    /// ```text
    /// z  = σ(gx_z + gh_z)
    /// r  = σ(gx_r + gh_r)
    /// h̃  = tanh(gx_n + r ∘ gh_n)
    /// h  = (1 − z) ∘ h_prev + z ∘ h̃
    /// ```
    pub fn gru_combine(&mut self, gx: Var, gh: Var, h_prev: Var) -> Result<Var> {
        let (n, one) = self.shape(h_prev);
        if one != 1 {
            return Err(shape_err("gru_combine", (n, one), (n, 1)));
        }
        for v in [gx, gh] {
            if self.shape(v) != (3 * n, 1) {
                return Err(shape_err("gru_combine", (3 * n, 1), self.shape(v)));
            }
        }
        let a = &self.nodes[gx.0].value.values;
        let b = &self.nodes[gh.0].value.values;
        let h = &self.nodes[h_prev.0].value.values;
        let mut z = vec![0.0; n];
        let mut r = vec![0.0; n];
        let mut cand = vec![0.0; n];
        let mut out = vec![0.0; n];
        for i in 0..n {
            z[i] = math::sigmoid(a[i] + b[i]);
            r[i] = math::sigmoid(a[n + i] + b[n + i]);
            cand[i] = math::tanh(a[2 * n + i] + r[i] * b[2 * n + i]);
            out[i] = (1.0 - z[i]) * h[i] + z[i] * cand[i];
        }
        let rg = self.needs(gx) || self.needs(gh) || self.needs(h_prev);
        Ok(self.push(
            Tensor1D::column(out),
            Op::GruCombine {
                gx,
                gh,
                h_prev,
                z,
                r,
                n: cand,
            },
            rg,
        ))
    }

    /// Concatenates tensors with equal channel counts along the length axis.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(first) = parts.first() else {
            return Err(Error::Usage("concat of zero tensors".into()));
        };
        let c = self.shape(*first).0;
        let mut total = 0;
        for p in parts {
            let s = self.shape(*p);
            if s.0 != c {
                return Err(shape_err("concat", (c, total), s));
            }
            total += s.1;
        }
        let mut out = Tensor1D::zeros(c, total);
        let mut offset = 0;
        for p in parts {
            let t = &self.nodes[p.0].value;
            for ch in 0..c {
                out.values[ch * total + offset..ch * total + offset + t.length]
                    .copy_from_slice(t.row(ch));
            }
            offset += t.length;
        }
        let rg = parts.iter().any(|p| self.needs(*p));
        Ok(self.push(out, Op::Concat(parts.to_vec()), rg))
    }

    /// Keeps the first `len` samples of every channel.
    pub fn crop(&mut self, input: Var, len: usize) -> Result<Var> {
        let (c, l) = self.shape(input);
        if len == 0 || len > l {
            return Err(shape_err("crop", (c, l), (c, len)));
        }
        if len == l {
            return Ok(input);
        }
        let x = &self.nodes[input.0].value;
        let mut out = Tensor1D::zeros(c, len);
        for ch in 0..c {
            out.row_mut(ch).copy_from_slice(&x.row(ch)[..len]);
        }
        let rg = self.needs(input);
        Ok(self.push(out, Op::Crop { input, len }, rg))
    }

    /// Mean of squared differences.
    pub fn mse_loss(&mut self, pred: Var, target: Var) -> Result<Var> {
        if self.shape(pred) != self.shape(target) {
            return Err(shape_err("mse_loss", self.shape(pred), self.shape(target)));
        }
        let p = &self.nodes[pred.0].value.values;
        let t = &self.nodes[target.0].value.values;
        let n = p.len().max(1) as f64;
        let sum: f64 = p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
        let rg = self.needs(pred) || self.needs(target);
        Ok(self.push(Tensor1D::scalar(sum / n), Op::Mse { pred, target }, rg))
    }

    /// Propagates from the scalar `loss` to every node, returns the leaf
    /// gradients and clears the tape.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        if loss.0 >= self.nodes.len() {
            return Err(Error::Usage("loss is not recorded on this tape".into()));
        }
        if self.nodes[loss.0].value.len() != 1 {
            let (c, l) = self.shape(loss);
            return Err(Error::Usage(alloc::format!(
                "backward needs a scalar loss, got {c}x{l}"
            )));
        }
        let nodes = core::mem::take(&mut self.nodes);
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; nodes.len()];
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let node = &nodes[idx];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            let need = |v: Var| nodes[v.0].requires_grad;
            match &node.op {
                Op::Leaf => unreachable!(),
                Op::ConvTranspose {
                    input,
                    kernel,
                    stride,
                    padding,
                } => {
                    let x = &nodes[input.0].value;
                    let w = &nodes[kernel.0].value;
                    let (cin, lin) = x.shape();
                    let k = w.length;
                    let cout = node.value.channels;
                    let lout = node.value.length;
                    let (dx_on, dw_on) = (need(*input), need(*kernel));
                    let mut dx = if dx_on { vec![0.0; cin * lin] } else { Vec::new() };
                    let mut dw = if dw_on { vec![0.0; w.len()] } else { Vec::new() };
                    let mut gath = vec![0.0; k * lin];
                    for co in 0..cout {
                        let gr = &g[co * lout..(co + 1) * lout];
                        for kk in 0..k {
                            let dst = &mut gath[kk * lin..(kk + 1) * lin];
                            for (i, d) in dst.iter_mut().enumerate() {
                                let j = i * stride + kk;
                                *d = if j >= *padding && j - padding < lout {
                                    gr[j - padding]
                                } else {
                                    0.0
                                };
                            }
                        }
                        for ci in 0..cin {
                            let row = ci * cout + co;
                            if dx_on {
                                let wr = w.row(row);
                                let dxr = &mut dx[ci * lin..(ci + 1) * lin];
                                for kk in 0..k {
                                    axpy(dxr, wr[kk], &gath[kk * lin..(kk + 1) * lin]);
                                }
                            }
                            if dw_on {
                                let xr = x.row(ci);
                                for kk in 0..k {
                                    dw[row * k + kk] += dot(xr, &gath[kk * lin..(kk + 1) * lin]);
                                }
                            }
                        }
                    }
                    if dx_on {
                        accumulate(&mut grads, *input, dx);
                    }
                    if dw_on {
                        accumulate(&mut grads, *kernel, dw);
                    }
                }
                Op::Conv {
                    input,
                    kernel,
                    stride,
                    padding,
                } => {
                    let x = &nodes[input.0].value;
                    let w = &nodes[kernel.0].value;
                    let (cin, lin) = x.shape();
                    let k = w.length;
                    let cout = node.value.channels;
                    let lout = node.value.length;
                    let (dx_on, dw_on) = (need(*input), need(*kernel));
                    let mut dx = if dx_on { vec![0.0; cin * lin] } else { Vec::new() };
                    let mut dw = if dw_on { vec![0.0; w.len()] } else { Vec::new() };
                    let mut gathered = vec![0.0; lout];
                    let mut summed = vec![0.0; lout];
                    for ci in 0..cin {
                        for kk in 0..k {
                            if dw_on {
                                gather(x.row(ci), &mut gathered, *stride, kk, *padding);
                            }
                            summed.iter_mut().for_each(|s| *s = 0.0);
                            for co in 0..cout {
                                let gr = &g[co * lout..(co + 1) * lout];
                                let widx = (co * cin + ci) * k + kk;
                                if dw_on {
                                    dw[widx] += dot(gr, &gathered);
                                }
                                if dx_on {
                                    axpy(&mut summed, w.values[widx], gr);
                                }
                            }
                            if dx_on {
                                let dxr = &mut dx[ci * lin..(ci + 1) * lin];
                                for (j, s) in summed.iter().enumerate() {
                                    let src = j * stride + kk;
                                    if src >= *padding && src - padding < lin {
                                        dxr[src - padding] += s;
                                    }
                                }
                            }
                        }
                    }
                    if dx_on {
                        accumulate(&mut grads, *input, dx);
                    }
                    if dw_on {
                        accumulate(&mut grads, *kernel, dw);
                    }
                }
                Op::BatchNorm {
                    input,
                    gamma,
                    beta,
                    xhat,
                    inv_std,
                    train,
                } => {
                    let (c, l) = node.value.shape();
                    let gam = &nodes[gamma.0].value.values;
                    let mut dgamma = vec![0.0; c];
                    let mut dbeta = vec![0.0; c];
                    let mut dx = vec![0.0; c * l];
                    for ch in 0..c {
                        let gr = &g[ch * l..(ch + 1) * l];
                        let xh = &xhat[ch * l..(ch + 1) * l];
                        let sum_g: f64 = gr.iter().sum();
                        let sum_gx = dot(gr, xh);
                        dgamma[ch] = sum_gx;
                        dbeta[ch] = sum_g;
                        let dxr = &mut dx[ch * l..(ch + 1) * l];
                        if *train {
                            let scale = gam[ch] * inv_std[ch] / l as f64;
                            for i in 0..l {
                                dxr[i] = scale * (l as f64 * gr[i] - sum_g - xh[i] * sum_gx);
                            }
                        } else {
                            let scale = gam[ch] * inv_std[ch];
                            for i in 0..l {
                                dxr[i] = scale * gr[i];
                            }
                        }
                    }
                    if need(*input) {
                        accumulate(&mut grads, *input, dx);
                    }
                    if need(*gamma) {
                        accumulate(&mut grads, *gamma, dgamma);
                    }
                    if need(*beta) {
                        accumulate(&mut grads, *beta, dbeta);
                    }
                }
                Op::Activation { input, kind } => {
                    let x = &nodes[input.0].value.values;
                    let y = &node.value.values;
                    let dx = g
                        .iter()
                        .zip(x.iter().zip(y))
                        .map(|(gv, (xv, yv))| gv * kind.derivative(*xv, *yv))
                        .collect();
                    accumulate(&mut grads, *input, dx);
                }
                Op::Linear {
                    weight,
                    input,
                    bias,
                } => {
                    let w = &nodes[weight.0].value;
                    let x = &nodes[input.0].value;
                    let (o, i) = w.shape();
                    let l = x.length;
                    if need(*weight) {
                        let mut dw = vec![0.0; o * i];
                        for r in 0..o {
                            let gr = &g[r * l..(r + 1) * l];
                            let dwr = &mut dw[r * i..(r + 1) * i];
                            if l == 1 {
                                axpy(dwr, gr[0], &x.values);
                            } else {
                                for (c, d) in dwr.iter_mut().enumerate() {
                                    *d = dot(gr, x.row(c));
                                }
                            }
                        }
                        accumulate(&mut grads, *weight, dw);
                    }
                    if need(*input) {
                        let mut dx = vec![0.0; i * l];
                        for r in 0..o {
                            let gr = &g[r * l..(r + 1) * l];
                            let wr = w.row(r);
                            if l == 1 {
                                axpy(&mut dx, gr[0], wr);
                            } else {
                                for (c, wv) in wr.iter().enumerate() {
                                    axpy(&mut dx[c * l..(c + 1) * l], *wv, gr);
                                }
                            }
                        }
                        accumulate(&mut grads, *input, dx);
                    }
                    if let Some(b) = bias {
                        if need(*b) {
                            let db = (0..o).map(|r| g[r * l..(r + 1) * l].iter().sum()).collect();
                            accumulate(&mut grads, *b, db);
                        }
                    }
                }
                Op::Add(a, b) => {
                    if need(*a) {
                        accumulate(&mut grads, *a, g.clone());
                    }
                    if need(*b) {
                        accumulate(&mut grads, *b, g);
                    }
                }
                Op::Scale(a, c) => {
                    accumulate(&mut grads, *a, g.iter().map(|v| c * v).collect());
                }
                Op::GruCombine {
                    gx,
                    gh,
                    h_prev,
                    z,
                    r,
                    n,
                } => {
                    let size = z.len();
                    let h = &nodes[h_prev.0].value.values;
                    let b = &nodes[gh.0].value.values;
                    let mut dpre = vec![0.0; 3 * size];
                    let mut dgh = vec![0.0; 3 * size];
                    let mut dh = vec![0.0; size];
                    for i in 0..size {
                        let gi = g[i];
                        let dn = gi * z[i];
                        let dz = gi * (n[i] - h[i]);
                        dh[i] = gi * (1.0 - z[i]);
                        let dpre_n = dn * (1.0 - n[i] * n[i]);
                        let dr = dpre_n * b[2 * size + i];
                        let dpre_r = dr * r[i] * (1.0 - r[i]);
                        let dpre_z = dz * z[i] * (1.0 - z[i]);
                        dpre[i] = dpre_z;
                        dpre[size + i] = dpre_r;
                        dpre[2 * size + i] = dpre_n;
                        dgh[i] = dpre_z;
                        dgh[size + i] = dpre_r;
                        dgh[2 * size + i] = dpre_n * r[i];
                    }
                    if need(*gx) {
                        accumulate(&mut grads, *gx, dpre);
                    }
                    if need(*gh) {
                        accumulate(&mut grads, *gh, dgh);
                    }
                    if need(*h_prev) {
                        accumulate(&mut grads, *h_prev, dh);
                    }
                }
                Op::Concat(parts) => {
                    let (c, total) = node.value.shape();
                    let mut offset = 0;
                    for p in parts {
                        let pl = nodes[p.0].value.length;
                        if need(*p) {
                            let mut d = vec![0.0; c * pl];
                            for ch in 0..c {
                                d[ch * pl..(ch + 1) * pl].copy_from_slice(
                                    &g[ch * total + offset..ch * total + offset + pl],
                                );
                            }
                            accumulate(&mut grads, *p, d);
                        }
                        offset += pl;
                    }
                }
                Op::Crop { input, len } => {
                    let (c, l) = nodes[input.0].value.shape();
                    let mut d = vec![0.0; c * l];
                    for ch in 0..c {
                        d[ch * l..ch * l + len].copy_from_slice(&g[ch * len..(ch + 1) * len]);
                    }
                    accumulate(&mut grads, *input, d);
                }
                Op::Mse { pred, target } => {
                    let p = &nodes[pred.0].value.values;
                    let t = &nodes[target.0].value.values;
                    let scale = 2.0 * g[0] / p.len().max(1) as f64;
                    let d: Vec<f64> = p.iter().zip(t).map(|(a, b)| scale * (a - b)).collect();
                    if need(*target) {
                        accumulate(&mut grads, *target, d.iter().map(|v| -v).collect());
                    }
                    if need(*pred) {
                        accumulate(&mut grads, *pred, d);
                    }
                }
            }
        }

        let shapes = nodes.iter().map(|n| n.value.shape()).collect();
        for (idx, node) in nodes.iter().enumerate() {
            if !(matches!(node.op, Op::Leaf) && node.requires_grad) {
                grads[idx] = None;
            }
        }
        Ok(Gradients { grads, shapes })
    }
}

fn accumulate(grads: &mut [Option<Vec<f64>>], v: Var, d: Vec<f64>) {
    match &mut grads[v.0] {
        Some(existing) => existing.iter_mut().zip(&d).for_each(|(e, x)| *e += x),
        slot => *slot = Some(d),
    }
}

// dst[j] = src[j·stride + offset − padding], zero outside the source.
fn gather(src: &[f64], dst: &mut [f64], stride: usize, offset: usize, padding: usize) {
    for (j, d) in dst.iter_mut().enumerate() {
        let idx = j * stride + offset;
        *d = if idx >= padding && idx - padding < src.len() {
            src[idx - padding]
        } else {
            0.0
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn row(v: &[f64]) -> Tensor1D {
        Tensor1D::row_vector(v.to_vec())
    }

    #[test]
    fn conv_transpose_hand_values() {
        let mut t = Tape::new();
        let x = t.constant(row(&[1.0]));
        let k = t.constant(row(&[1.0]));
        let y = t.conv_transpose_1d(x, k, 1, 1, 0).unwrap();
        assert_eq!(t.value(y).values, vec![1.0]);

        let x = t.constant(row(&[1.0, 2.0]));
        let k = t.constant(row(&[1.0, 1.0]));
        let y = t.conv_transpose_1d(x, k, 1, 2, 0).unwrap();
        assert_eq!(t.value(y).values, vec![1.0, 1.0, 2.0, 2.0]);

        let x = t.constant(Tensor1D::zeros(1, 512));
        let k = t.constant(Tensor1D::zeros(1, 4));
        let y = t.conv_transpose_1d(x, k, 1, 2, 1).unwrap();
        assert_eq!(t.value(y).length, 1024);
    }

    #[test]
    fn conv_transpose_shape_error_names_both_shapes() {
        let mut t = Tape::new();
        let x = t.constant(Tensor1D::zeros(3, 8));
        let k = t.constant(Tensor1D::zeros(4, 4));
        let err = t.conv_transpose_1d(x, k, 2, 2, 1).unwrap_err();
        assert_eq!(
            err,
            Error::Shape {
                op: "conv_transpose_1d",
                left: (3, 8),
                right: (4, 4)
            }
        );
    }

    #[test]
    fn batch_norm_hand_values() {
        let mut t = Tape::new();
        let x = t.constant(row(&[1.0, 3.0]));
        let g = t.constant(Tensor1D::scalar(2.0));
        let b = t.constant(Tensor1D::scalar(1.0));
        let y = t.batch_norm_1d(x, g, b, 1e-12, &BnMode::Train).unwrap();
        let v = &t.value(y).values;
        assert!((v[0] + 1.0).abs() < 1e-9 && (v[1] - 3.0).abs() < 1e-9);

        let x = t.constant(row(&[4.0; 6]));
        let g = t.constant(Tensor1D::scalar(1.0));
        let b = t.constant(Tensor1D::scalar(0.0));
        let y = t.batch_norm_1d(x, g, b, 1e-5, &BnMode::Train).unwrap();
        assert!(t.value(y).values.iter().all(|v| *v == 0.0));

        let x = t.constant(row(&[1.0, -1.0, 1.0, -1.0]));
        let y = t.batch_norm_1d(x, g, b, 1e-5, &BnMode::Train).unwrap();
        for (a, e) in t.value(y).values.iter().zip([1.0, -1.0, 1.0, -1.0]) {
            assert!((a - e).abs() < 1e-5);
        }
        assert!(t.batch_norm_1d(x, g, b, 0.0, &BnMode::Train).is_err());
    }

    #[test]
    fn activation_hand_values() {
        assert_eq!(Activation::Relu.apply(-1.0), 0.0);
        assert_eq!(Activation::Tanh.apply(0.0), 0.0);
        assert_eq!(Activation::Tanh.derivative(0.0, 0.0), 1.0);
        assert!((Activation::LeakyRelu(0.2).apply(-2.0) + 0.4).abs() < 1e-15);
        assert_eq!(Activation::Relu.derivative(0.0, 0.0), 0.0);
    }

    #[test]
    fn mse_hand_values() {
        let mut t = Tape::new();
        let p = t.constant(row(&[0.0, 0.0]));
        let q = t.constant(row(&[1.0, 1.0]));
        let l = t.mse_loss(p, q).unwrap();
        assert_eq!(t.value(l).values, vec![1.0]);
        let l = t.mse_loss(q, q).unwrap();
        assert_eq!(t.value(l).values, vec![0.0]);
        let a = t.constant(row(&[0.3, -1.2, 2.0]));
        let b = t.constant(row(&[1.1, 0.4, -0.5]));
        let base = t.mse_loss(a, b).unwrap();
        let (a3, b3) = (t.scale(a, 3.0), t.scale(b, 3.0));
        let scaled = t.mse_loss(a3, b3).unwrap();
        let (l0, l1) = (t.value(base).values[0], t.value(scaled).values[0]);
        assert!((l1 - 9.0 * l0).abs() < 1e-12);
        let c = t.constant(row(&[1.0]));
        assert!(matches!(t.mse_loss(a, c), Err(Error::Shape { .. })));
    }

    #[test]
    fn square_gradient() {
        // loss = w² expressed as mse(w, 0) over one element.
        let mut t = Tape::new();
        let w = t.param(Tensor1D::scalar(3.0));
        let zero = t.constant(Tensor1D::scalar(0.0));
        let l = t.mse_loss(w, zero).unwrap();
        let g = t.backward(l).unwrap();
        assert_eq!(g.wrt(w).values, vec![6.0]);
        assert!(t.is_empty());
    }

    #[test]
    fn untouched_parameter_has_zero_gradient() {
        let mut t = Tape::new();
        let w = t.param(Tensor1D::scalar(3.0));
        let unused = t.param(Tensor1D::zeros(2, 3));
        let zero = t.constant(Tensor1D::scalar(0.0));
        let l = t.mse_loss(w, zero).unwrap();
        let g = t.backward(l).unwrap();
        assert_eq!(g.wrt(unused), Tensor1D::zeros(2, 3));
    }

    #[test]
    fn backward_needs_scalar() {
        let mut t = Tape::new();
        let w = t.param(row(&[1.0, 2.0]));
        let y = t.scale(w, 2.0);
        assert!(matches!(t.backward(y), Err(Error::Usage(_))));
    }

    #[test]
    fn gru_combine_gate_semantics() {
        let mut t = Tape::new();
        let h = t.constant(Tensor1D::column(vec![1.0]));
        let zeros = t.constant(Tensor1D::zeros(3, 1));
        let out = t.gru_combine(zeros, zeros, h).unwrap();
        assert_eq!(t.value(out).values, vec![0.5]);
        // A very negative update pre-activation keeps the previous state.
        let gx = t.constant(Tensor1D::column(vec![-800.0, 0.3, 2.0]));
        let out = t.gru_combine(gx, zeros, h).unwrap();
        assert_eq!(t.value(out).values, vec![1.0]);
    }

    #[test]
    fn concat_and_crop_shapes() {
        let mut t = Tape::new();
        let a = t.constant(Tensor1D::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap());
        let b = t.constant(Tensor1D::new(2, 1, vec![5.0, 6.0]).unwrap());
        let c = t.concat(&[a, b]).unwrap();
        assert_eq!(t.value(c).values, vec![1.0, 2.0, 5.0, 3.0, 4.0, 6.0]);
        let d = t.crop(c, 2).unwrap();
        assert_eq!(t.value(d), t.value(a));
        assert!(t.crop(c, 4).is_err());
    }
}
