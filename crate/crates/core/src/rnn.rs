//! Stacked-GRU encoder/decoder denoiser.
//!
//! The encoder reads the (max-abs normalized) sequence; its top hidden state
//! after the last step is the context `G`. The decoder is fed `G` at every
//! step and, when `decoder_sees_input` is set, also the previous observed
//! sample, so step `t` predicts sample `t` from `G` and sample `t − 1`.
//! A linear projection maps the top decoder state to one output value.
//!
//! Gate order inside every `3N`-row block is (update, reset, candidate):
//!
//! ```text
//! z  = σ(W_z x + b_z + U_z h + c_z)
//! r  = σ(W_r x + b_r + U_r h + c_r)
//! h̃  = tanh(W_n x + b_n + r ∘ (U_n h + c_n))
//! h' = (1 − z) ∘ h + z ∘ h̃
//! ```

use alloc::vec;
use alloc::vec::Vec;

use crate::autodiff::{Adam, Tape, Tensor1D, Var};
use crate::channel::{tags, RngStream};
use crate::dip::{denormalize, normalize};
use crate::error::{Error, Result};
use crate::math;
use crate::signal::Signal;

/// One GRU layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    /// `3N × in`.
    pub w_ih: Tensor1D,
    /// `3N × N`.
    pub w_hh: Tensor1D,
    pub b_ih: Tensor1D,
    pub b_hh: Tensor1D,
}

impl GruParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        GruParams {
            w_ih: Tensor1D::zeros(3 * hidden, input),
            w_hh: Tensor1D::zeros(3 * hidden, hidden),
            b_ih: Tensor1D::zeros(3 * hidden, 1),
            b_hh: Tensor1D::zeros(3 * hidden, 1),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.length
    }

    pub fn input(&self) -> usize {
        self.w_ih.length
    }

    fn tensors(&self) -> [&Tensor1D; 4] {
        [&self.w_ih, &self.w_hh, &self.b_ih, &self.b_hh]
    }

    fn tensors_mut(&mut self) -> [&mut Tensor1D; 4] {
        [&mut self.w_ih, &mut self.w_hh, &mut self.b_ih, &mut self.b_hh]
    }
}

/// One GRU step outside any tape.
pub fn gru_cell(x: &[f64], h_prev: &[f64], p: &GruParams) -> Result<Vec<f64>> {
    let n = p.hidden();
    if x.len() != p.input() || h_prev.len() != n {
        return Err(Error::Shape {
            op: "gru_cell",
            left: (p.input(), n),
            right: (x.len(), h_prev.len()),
        });
    }
    let mut a = p.b_ih.values.clone();
    let mut b = p.b_hh.values.clone();
    for r in 0..3 * n {
        a[r] += crate::autodiff::dot(p.w_ih.row(r), x);
        b[r] += crate::autodiff::dot(p.w_hh.row(r), h_prev);
    }
    Ok((0..n)
        .map(|i| {
            let z = math::sigmoid(a[i] + b[i]);
            let r = math::sigmoid(a[n + i] + b[n + i]);
            let c = math::tanh(a[2 * n + i] + r * b[2 * n + i]);
            (1.0 - z) * h_prev[i] + z * c
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RnnConfig {
    pub hidden: usize,
    pub depth: usize,
    pub decoder_sees_input: bool,
    pub seed: u64,
}

impl Default for RnnConfig {
    fn default() -> Self {
        RnnConfig {
            hidden: 64,
            depth: 2,
            decoder_sees_input: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Seq2SeqModel {
    pub hidden: usize,
    pub decoder_sees_input: bool,
    pub encoder: Vec<GruParams>,
    /// Layer 0 reads the context `G` through `w_ih`.
    pub decoder: Vec<GruParams>,
    /// `3N × 1` weight of the previous-sample input of decoder layer 0.
    pub aux_weight: Tensor1D,
    /// `1 × N`.
    pub proj_w: Tensor1D,
    pub proj_b: Tensor1D,
    /// Noise power of the training sequence (0 until trained).
    pub trained_sigma2: f64,
}

impl Seq2SeqModel {
    /// Uniform `±1/√N` initialization, projection included.
    pub fn new(cfg: &RnnConfig) -> Result<Self> {
        if cfg.hidden == 0 || cfg.depth == 0 {
            return Err(Error::Config("RNN hidden size and depth must be >= 1".into()));
        }
        let mut m = Seq2SeqModel::zeros(cfg.hidden, cfg.depth, cfg.decoder_sees_input);
        let bound = 1.0 / math::sqrt(cfg.hidden as f64);
        let mut rng = RngStream::tagged(cfg.seed, tags::RNN_WEIGHTS, 0).sampler();
        for t in m.tensors_mut() {
            t.values
                .iter_mut()
                .for_each(|v| *v = rng.uniform_in(-bound, bound));
        }
        if !cfg.decoder_sees_input {
            m.aux_weight.values.iter_mut().for_each(|v| *v = 0.0);
        }
        Ok(m)
    }

    pub fn zeros(hidden: usize, depth: usize, decoder_sees_input: bool) -> Self {
        let stack = |first: usize| {
            (0..depth)
                .map(|i| GruParams::zeros(if i == 0 { first } else { hidden }, hidden))
                .collect::<Vec<_>>()
        };
        Seq2SeqModel {
            hidden,
            decoder_sees_input,
            encoder: stack(1),
            decoder: stack(hidden),
            aux_weight: Tensor1D::zeros(3 * hidden, 1),
            proj_w: Tensor1D::zeros(1, hidden),
            proj_b: Tensor1D::zeros(1, 1),
            trained_sigma2: 0.0,
        }
    }

    pub fn depth(&self) -> usize {
        self.encoder.len()
    }

    /// Every trainable tensor in a fixed order.
    pub fn tensors(&self) -> Vec<&Tensor1D> {
        let mut out = Vec::new();
        for l in self.encoder.iter().chain(&self.decoder) {
            out.extend(l.tensors());
        }
        out.extend([&self.aux_weight, &self.proj_w, &self.proj_b]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor1D> {
        let mut out = Vec::new();
        for l in self.encoder.iter_mut().chain(self.decoder.iter_mut()) {
            out.extend(l.tensors_mut());
        }
        out.push(&mut self.aux_weight);
        out.push(&mut self.proj_w);
        out.push(&mut self.proj_b);
        out
    }

    fn check_input(&self, seq: &[f64]) -> Result<()> {
        if seq.is_empty() {
            return Err(Error::domain("RNN input sequence must be nonempty"));
        }
        Ok(())
    }

    /// Records encoder and decoder on `tape`; returns one `1 × 1` output per
    /// step and the parameter handles in [`Seq2SeqModel::tensors`] order.
    pub fn record(&self, tape: &mut Tape, seq: &[f64]) -> Result<(Vec<Var>, Vec<Var>)> {
        self.check_input(seq)?;
        let params: Vec<Var> = self.tensors().into_iter().map(|t| tape.param(t.clone())).collect();
        let depth = self.depth();
        let layer = |i: usize| &params[4 * i..4 * i + 4];
        let zero_h = tape.constant(Tensor1D::zeros(self.hidden, 1));

        let mut h = vec![zero_h; depth];
        for &x in seq {
            let mut input = tape.constant(Tensor1D::scalar(x));
            for (l, hl) in h.iter_mut().enumerate() {
                let p = layer(l);
                let gx = tape.linear(p[0], input, Some(p[2]))?;
                let gh = tape.linear(p[1], *hl, Some(p[3]))?;
                *hl = tape.gru_combine(gx, gh, *hl)?;
                input = *hl;
            }
        }
        let context = h[depth - 1];

        let aux = params[8 * depth];
        let (proj_w, proj_b) = (params[8 * depth + 1], params[8 * depth + 2]);
        let p0 = layer(depth);
        let gx_context = tape.linear(p0[0], context, Some(p0[2]))?;
        let mut h = vec![zero_h; depth];
        let mut outputs = Vec::with_capacity(seq.len());
        for t in 0..seq.len() {
            let mut gx = gx_context;
            if self.decoder_sees_input {
                let prev = if t == 0 { 0.0 } else { seq[t - 1] };
                let prev = tape.constant(Tensor1D::scalar(prev));
                let extra = tape.linear(aux, prev, None)?;
                gx = tape.add(gx, extra)?;
            }
            let mut input = h[0];
            for l in 0..depth {
                let p = layer(depth + l);
                if l > 0 {
                    gx = tape.linear(p[0], input, Some(p[2]))?;
                }
                let gh = tape.linear(p[1], h[l], Some(p[3]))?;
                h[l] = tape.gru_combine(gx, gh, h[l])?;
                input = h[l];
            }
            outputs.push(tape.linear(proj_w, input, Some(proj_b))?);
        }
        Ok((outputs, params))
    }
}

fn run_layer_stack(layers: &[GruParams], h: &mut [Vec<f64>], first: &[f64]) -> Result<()> {
    let mut input = first.to_vec();
    for (p, hl) in layers.iter().zip(h.iter_mut()) {
        *hl = gru_cell(&input, hl, p)?;
        input.clone_from(hl);
    }
    Ok(())
}

/// Top encoder state after the last step.
pub fn encode(model: &Seq2SeqModel, seq: &Signal) -> Result<Vec<f64>> {
    model.check_input(&seq.values)?;
    let mut h = vec![vec![0.0; model.hidden]; model.depth()];
    for &x in &seq.values {
        run_layer_stack(&model.encoder, &mut h, &[x])?;
    }
    Ok(h.pop().unwrap_or_default())
}

/// Unrolls the decoder for `len` steps from context `g`. `prev_input` is the
/// observed sequence whose previous sample feeds the decoder; `None` feeds
/// zeros.
pub fn decode(model: &Seq2SeqModel, g: &[f64], len: usize, prev_input: Option<&[f64]>) -> Result<Signal> {
    if len == 0 {
        return Err(Error::domain("decode length must be >= 1"));
    }
    if g.len() != model.hidden {
        return Err(Error::Shape {
            op: "decode",
            left: (model.hidden, 1),
            right: (g.len(), 1),
        });
    }
    if let Some(p) = prev_input {
        if p.len() < len {
            return Err(Error::Shape {
                op: "decode",
                left: (1, len),
                right: (1, p.len()),
            });
        }
    }
    let n = model.hidden;
    let p0 = &model.decoder[0];
    let mut gx_context = p0.b_ih.values.clone();
    for r in 0..3 * n {
        gx_context[r] += crate::autodiff::dot(p0.w_ih.row(r), g);
    }
    let mut h = vec![vec![0.0; n]; model.depth()];
    let mut out = Vec::with_capacity(len);
    for t in 0..len {
        let prev = match prev_input {
            Some(p) if t > 0 && model.decoder_sees_input => p[t - 1],
            _ => 0.0,
        };
        let a: Vec<f64> = gx_context
            .iter()
            .zip(&model.aux_weight.values)
            .map(|(c, w)| c + w * prev)
            .collect();
        h[0] = gru_from_preactivation(&a, &h[0], p0);
        for l in 1..model.depth() {
            let below = h[l - 1].clone();
            h[l] = gru_cell(&below, &h[l], &model.decoder[l])?;
        }
        let top = &h[model.depth() - 1];
        out.push(crate::autodiff::dot(&model.proj_w.values, top) + model.proj_b.values[0]);
    }
    Ok(Signal::new(out, 1.0))
}

fn gru_from_preactivation(a: &[f64], h_prev: &[f64], p: &GruParams) -> Vec<f64> {
    let n = h_prev.len();
    let mut b = p.b_hh.values.clone();
    for (r, bv) in b.iter_mut().enumerate() {
        *bv += crate::autodiff::dot(p.w_hh.row(r), h_prev);
    }
    (0..n)
        .map(|i| {
            let z = math::sigmoid(a[i] + b[i]);
            let r = math::sigmoid(a[n + i] + b[n + i]);
            let c = math::tanh(a[2 * n + i] + r * b[2 * n + i]);
            (1.0 - z) * h_prev[i] + z * c
        })
        .collect()
}

/// Training loss `Σ ½ (target − output)²` with its parameter gradients.
///
/// With `decoder_sees_input` every output is paired with the same-index
/// sample (its input is the previous one); otherwise output `t` is paired
/// with sample `t + 1`.
pub fn rnn_loss(model: &Seq2SeqModel, seq: &[f64]) -> Result<(f64, Vec<Tensor1D>)> {
    let mut tape = Tape::new();
    let (outputs, params) = model.record(&mut tape, seq)?;
    let (pred, target) = if model.decoder_sees_input {
        (&outputs[..], seq)
    } else {
        if seq.len() < 2 {
            return Err(Error::domain("next-step pairing needs at least two samples"));
        }
        (&outputs[..seq.len() - 1], &seq[1..])
    };
    let pred = tape.concat(pred)?;
    let target = tape.constant(Tensor1D::row_vector(target.to_vec()));
    let mse = tape.mse_loss(pred, target)?;
    let loss = tape.scale(mse, 0.5 * target_len(&tape, target) as f64);
    let value = tape.value(loss).values[0];
    let grads = tape.backward(loss)?;
    Ok((value, grads.collect(&params)))
}

fn target_len(tape: &Tape, v: Var) -> usize {
    tape.value(v).length
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub iters: usize,
    pub lr: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { iters: 800, lr: 1e-4 }
    }
}

/// Fits `model` to one noisy sequence with ADAM; returns the loss before
/// each update.
pub fn train_rnn(model: &mut Seq2SeqModel, train_noisy: &Signal, cfg: &TrainConfig) -> Result<Vec<f64>> {
    if cfg.iters == 0 {
        return Err(Error::Config("RNN training needs at least one iteration".into()));
    }
    let (norm, _) = normalize(train_noisy)?;
    let mut adam = Adam::new(cfg.lr)?;
    let mut history = Vec::with_capacity(cfg.iters);
    let mut params: Vec<Tensor1D> = model.tensors().into_iter().cloned().collect();
    for it in 0..cfg.iters {
        let (loss, grads) = rnn_loss(model, &norm.values)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { iteration: it });
        }
        history.push(loss);
        adam.step(&mut params, &grads)?;
        for (dst, src) in model.tensors_mut().into_iter().zip(&params) {
            dst.values.copy_from_slice(&src.values);
        }
    }
    Ok(history)
}

/// `chi = decode(encode(mu))` on the normalized sequence, restored to the
/// input scale, on the input's time grid.
pub fn rnn_denoise(model: &Seq2SeqModel, test_noisy: &Signal) -> Result<Signal> {
    let (norm, scale) = normalize(test_noisy)?;
    let g = encode(model, &norm)?;
    let out = decode(model, &g, norm.len(), Some(&norm.values))?;
    Ok(denormalize(&test_noisy.like(out.values), scale))
}

const MAGIC: &[u8; 8] = b"DCSGRU01";
const FLAG_DECODER_SEES_INPUT: u32 = 1;

/// Little-endian layout: magic, `u32` N, `u32` depth, `u32` flags, `f64`
/// training noise power, then every tensor of [`Seq2SeqModel::tensors`].
pub fn to_bytes(model: &Seq2SeqModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(model.hidden as u32).to_le_bytes());
    out.extend_from_slice(&(model.depth() as u32).to_le_bytes());
    let flags = if model.decoder_sees_input { FLAG_DECODER_SEES_INPUT } else { 0 };
    out.extend_from_slice(&flags.to_le_bytes());
    out.extend_from_slice(&model.trained_sigma2.to_le_bytes());
    for t in model.tensors() {
        for v in &t.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<Seq2SeqModel> {
    let bad = |what: &str| Error::Config(alloc::format!("invalid RNN weights file: {what}"));
    if bytes.len() < 28 || &bytes[..8] != MAGIC {
        return Err(bad("bad magic"));
    }
    let word = |i: usize| u32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]) as usize;
    let (hidden, depth, flags) = (word(8), word(12), word(16) as u32);
    if hidden == 0 || depth == 0 || hidden > 4096 || depth > 64 {
        return Err(bad("implausible header"));
    }
    let mut model = Seq2SeqModel::zeros(hidden, depth, flags & FLAG_DECODER_SEES_INPUT != 0);
    let mut rest = &bytes[20..];
    let mut take = || -> Result<f64> {
        let (head, tail) = rest.split_first_chunk::<8>().ok_or_else(|| bad("truncated"))?;
        rest = tail;
        Ok(f64::from_le_bytes(*head))
    };
    model.trained_sigma2 = take()?;
    for t in model.tensors_mut() {
        for v in t.values.iter_mut() {
            *v = take()?;
        }
    }
    if !rest.is_empty() {
        return Err(bad("trailing bytes"));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_cell_examples() {
        let p = GruParams::zeros(1, 1);
        assert_eq!(gru_cell(&[0.0], &[0.0], &p).unwrap(), vec![0.0]);
        assert_eq!(gru_cell(&[0.0], &[1.0], &p).unwrap(), vec![0.5]);
        assert!(gru_cell(&[0.0, 1.0], &[1.0], &p).is_err());
    }

    #[test]
    fn closed_update_gate_keeps_state() {
        let mut p = GruParams::zeros(1, 2);
        p.b_ih.values[0] = -1e3;
        p.b_ih.values[1] = -1e3;
        p.b_ih.values[4] = 3.0;
        let h = [0.3, -0.7];
        assert_eq!(gru_cell(&[2.0], &h, &p).unwrap(), h.to_vec());
    }

    #[test]
    fn zero_model_outputs_zero() {
        let m = Seq2SeqModel::zeros(8, 2, true);
        let s = Signal::new(vec![0.3, -0.1, 0.8], 0.1);
        let g = encode(&m, &s).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
        for len in [1, 250, 1024] {
            let out = decode(&m, &g, len, None).unwrap();
            assert_eq!(out.len(), len);
            assert!(out.values.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn preset_context_size_and_order_sensitivity() {
        let m = Seq2SeqModel::new(&RnnConfig::default()).unwrap();
        let a = Signal::new(vec![0.5, -0.2, 0.9, 0.1], 0.1);
        let b = Signal::new(vec![0.1, 0.9, -0.2, 0.5], 0.1);
        let ga = encode(&m, &a).unwrap();
        assert_eq!(ga.len(), 64);
        assert_ne!(ga, encode(&m, &b).unwrap());
    }

    #[test]
    fn tape_forward_matches_direct_forward() {
        let cfg = RnnConfig {
            hidden: 5,
            depth: 2,
            decoder_sees_input: true,
            seed: 4,
        };
        let m = Seq2SeqModel::new(&cfg).unwrap();
        let seq = [0.2, -0.4, 0.7, 0.05, -0.9];
        let mut tape = Tape::new();
        let (outs, _) = m.record(&mut tape, &seq).unwrap();
        let g = encode(&m, &Signal::new(seq.to_vec(), 1.0)).unwrap();
        let direct = decode(&m, &g, seq.len(), Some(&seq)).unwrap();
        for (o, d) in outs.iter().zip(&direct.values) {
            assert!((tape.value(*o).values[0] - d).abs() < 1e-14);
        }
    }

    #[test]
    fn hidden_states_stay_bounded() {
        let mut m = Seq2SeqModel::new(&RnnConfig {
            hidden: 6,
            ..RnnConfig::default()
        })
        .unwrap();
        for t in m.tensors_mut() {
            t.values.iter_mut().for_each(|v| *v *= 50.0);
        }
        let mut h = vec![vec![0.0; 6]; 2];
        for x in [5.0, -30.0, 100.0, 0.0, 7.0] {
            run_layer_stack(&m.encoder, &mut h, &[x]).unwrap();
            assert!(h.iter().flatten().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn bytes_round_trip() {
        let mut m = Seq2SeqModel::new(&RnnConfig {
            hidden: 3,
            depth: 2,
            decoder_sees_input: false,
            seed: 1,
        })
        .unwrap();
        m.trained_sigma2 = 0.3;
        let bytes = to_bytes(&m);
        assert_eq!(from_bytes(&bytes).unwrap(), m);
        assert!(from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(from_bytes(b"nonsense").is_err());
    }
}
