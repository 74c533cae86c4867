//! Untrained transposed-convolution generator fitted to one noisy observation.
//!
//! The generator maps a frozen random latent `k` through a stack of strided
//! transposed convolutions to a single tanh-bounded channel. Fitting its
//! weights to the (max-abs normalized) observation for a limited number of
//! steps yields the denoised drive estimate `chi`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::autodiff::{Activation, BnMode, Gradients, RmsProp, Tape, Tensor1D, Var};
use crate::channel::{tags, RngStream};
use crate::error::{Error, Result};
use crate::math;
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub latent_channels: usize,
    pub latent_length: usize,
    /// Channels of every hidden layer.
    pub filters: usize,
    pub n_layers: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub output_length: usize,
    /// Allow a native output longer than `output_length` and keep its prefix.
    pub crop: bool,
    pub weight_std: f64,
    pub bn_eps: f64,
    pub seed: u64,
}

impl GeneratorConfig {
    /// Latent 64×32, five stride-2 layers of 64 filters: 32·2⁵ = 1024 samples.
    pub fn preset(seed: u64) -> Self {
        GeneratorConfig {
            latent_channels: 64,
            latent_length: 32,
            filters: 64,
            n_layers: 5,
            kernel: 4,
            stride: 2,
            padding: 1,
            output_length: 1024,
            crop: false,
            weight_std: 0.02,
            bn_eps: 1e-5,
            seed,
        }
    }

    /// The preset geometry with the shortest latent whose native output
    /// covers `len` samples; the surplus is cropped.
    pub fn for_length(len: usize, seed: u64) -> Self {
        let mut cfg = GeneratorConfig::preset(seed);
        cfg.latent_length = 1;
        while cfg.native_length() < len {
            cfg.latent_length += 1;
        }
        cfg.crop = cfg.native_length() != len;
        cfg.output_length = len;
        cfg
    }

    fn layer_length(&self, lin: usize) -> Option<usize> {
        let full = lin.checked_sub(1)? * self.stride + self.kernel;
        full.checked_sub(2 * self.padding).filter(|l| *l > 0)
    }

    /// Per-layer lengths, latent first; `None` entries mark a collapse.
    pub fn layer_lengths(&self) -> Vec<Option<usize>> {
        let mut out = Vec::with_capacity(self.n_layers + 1);
        let mut cur = Some(self.latent_length).filter(|l| *l > 0);
        out.push(cur);
        for _ in 0..self.n_layers {
            cur = cur.and_then(|l| self.layer_length(l));
            out.push(cur);
        }
        out
    }

    pub fn native_length(&self) -> usize {
        self.layer_lengths().last().copied().flatten().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.latent_channels == 0 || self.filters == 0 || self.n_layers == 0 {
            return Err(Error::Config(
                "generator needs nonzero channels, filters and layers".into(),
            ));
        }
        if self.kernel == 0 || self.stride == 0 {
            return Err(Error::Config("generator kernel and stride must be >= 1".into()));
        }
        if !(self.weight_std >= 0.0) || !(self.bn_eps > 0.0) {
            return Err(Error::Config("weight_std must be >= 0 and bn_eps > 0".into()));
        }
        let native = self.native_length();
        let fits = if self.crop {
            native >= self.output_length
        } else {
            native == self.output_length
        };
        if self.output_length == 0 || !fits {
            let lengths: Vec<String> = self
                .layer_lengths()
                .iter()
                .map(|l| l.map_or_else(|| String::from("-"), |v| format!("{v}")))
                .collect();
            return Err(Error::Config(format!(
                "generator layer lengths {} do not produce output length {}",
                lengths.join(" -> "),
                self.output_length
            )));
        }
        Ok(())
    }

    fn layer_channels(&self, i: usize) -> (usize, usize) {
        let cin = if i == 0 { self.latent_channels } else { self.filters };
        let cout = if i + 1 == self.n_layers { 1 } else { self.filters };
        (cin, cout)
    }
}

/// Generator weights plus the frozen latent input.
///
/// `params` holds, per layer, the kernel followed (for hidden layers) by the
/// batch-norm scale and shift.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorNet {
    pub cfg: GeneratorConfig,
    pub params: Vec<Tensor1D>,
    pub latent: Tensor1D,
}

pub fn build_generator(cfg: &GeneratorConfig) -> Result<GeneratorNet> {
    cfg.validate()?;
    let mut wrng = RngStream::tagged(cfg.seed, tags::GENERATOR_WEIGHTS, 0).sampler();
    let mut params = Vec::new();
    for i in 0..cfg.n_layers {
        let (cin, cout) = cfg.layer_channels(i);
        let values = (0..cin * cout * cfg.kernel)
            .map(|_| cfg.weight_std * wrng.standard_normal())
            .collect();
        params.push(Tensor1D::new(cin * cout, cfg.kernel, values)?);
        if i + 1 < cfg.n_layers {
            params.push(Tensor1D::filled(cout, 1, 1.0));
            params.push(Tensor1D::zeros(cout, 1));
        }
    }
    let mut lrng = RngStream::tagged(cfg.seed, tags::GENERATOR_LATENT, 0).sampler();
    let latent = Tensor1D::new(
        cfg.latent_channels,
        cfg.latent_length,
        (0..cfg.latent_channels * cfg.latent_length)
            .map(|_| lrng.standard_normal())
            .collect(),
    )?;
    Ok(GeneratorNet {
        cfg: *cfg,
        params,
        latent,
    })
}

impl GeneratorNet {
    /// Records a forward pass; returns the `1 × output_length` output and the
    /// parameter handles in `params` order.
    pub fn record(&self, tape: &mut Tape) -> Result<(Var, Vec<Var>)> {
        let cfg = &self.cfg;
        let vars = tape.params(&self.params);
        let mut h = tape.constant(self.latent.clone());
        let mut p = 0;
        for i in 0..cfg.n_layers {
            let (_, cout) = cfg.layer_channels(i);
            h = tape.conv_transpose_1d(h, vars[p], cout, cfg.stride, cfg.padding)?;
            p += 1;
            if i + 1 < cfg.n_layers {
                h = tape.batch_norm_1d(h, vars[p], vars[p + 1], cfg.bn_eps, &BnMode::Train)?;
                h = tape.activation(h, Activation::Relu);
                p += 2;
            } else {
                h = tape.activation(h, Activation::Tanh);
            }
        }
        if cfg.crop {
            h = tape.crop(h, cfg.output_length)?;
        }
        Ok((h, vars))
    }
}

/// Output of the generator on its own latent, in `[-1, 1]`, unit sample step.
pub fn generator_forward(net: &GeneratorNet) -> Result<Signal> {
    let mut tape = Tape::new();
    let (out, _) = net.record(&mut tape)?;
    Ok(Signal::new(tape.value(out).values.clone(), 1.0))
}

/// Max-abs scaling; an all-zero signal keeps scale 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale(pub f64);

pub fn normalize(signal: &Signal) -> Result<(Signal, Scale)> {
    signal.ensure_nonempty("signal to normalize")?;
    let m = signal.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !m.is_finite() {
        return Err(Error::domain("cannot normalize a non-finite signal"));
    }
    let scale = if m > 0.0 { m } else { 1.0 };
    Ok((
        signal.like(signal.values.iter().map(|v| v / scale).collect()),
        Scale(scale),
    ))
}

pub fn denormalize(signal: &Signal, scale: Scale) -> Signal {
    signal.like(signal.values.iter().map(|v| v * scale.0).collect())
}

/// Fitting schedule: `iters` RMSProp steps, then `gd_iters` plain descent
/// steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipSchedule {
    pub iters: usize,
    pub lr: f64,
    pub mom: f64,
    pub gd_iters: usize,
    pub gd_lr: f64,
}

impl Default for DipSchedule {
    fn default() -> Self {
        DipSchedule {
            iters: 800,
            lr: 1e-4,
            mom: 0.9,
            gd_iters: 200,
            gd_lr: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DipResult {
    pub chi: Signal,
    /// Loss before each update, RMSProp steps first.
    pub loss_history: Vec<f64>,
    pub iterations_run: usize,
}

/// What an observer sees before update `iteration` is applied.
#[derive(Debug)]
pub struct DipSnapshot<'a> {
    pub iteration: usize,
    pub loss: f64,
    /// Current generator output restored to the observation scale.
    pub chi: &'a [f64],
}

pub fn dip_optimize(net: &mut GeneratorNet, mu: &Signal, sched: &DipSchedule) -> Result<DipResult> {
    dip_optimize_with(net, mu, sched, |_| {})
}

/// [`dip_optimize`] with a callback invoked once per iteration.
pub fn dip_optimize_with<F>(
    net: &mut GeneratorNet,
    mu: &Signal,
    sched: &DipSchedule,
    mut observer: F,
) -> Result<DipResult>
where
    F: FnMut(&DipSnapshot<'_>),
{
    if sched.iters == 0 {
        return Err(Error::Config("DIP needs at least one iteration".into()));
    }
    if mu.len() != net.cfg.output_length {
        return Err(Error::Shape {
            op: "dip_optimize",
            left: (1, net.cfg.output_length),
            right: (1, mu.len()),
        });
    }
    let (target, scale) = normalize(mu)?;
    let target = Tensor1D::row_vector(target.values);
    let mut rms = RmsProp::new(sched.lr, sched.mom)?;
    if sched.gd_iters > 0 && !(sched.gd_lr > 0.0) {
        return Err(Error::Config("GD learning rate must be positive".into()));
    }
    let total = sched.iters + sched.gd_iters;
    let mut history = Vec::with_capacity(total);
    let mut chi = Vec::with_capacity(mu.len());
    for it in 0..total {
        let (loss, grads) = loss_and_grads(net, &target, |out| {
            chi.clear();
            chi.extend(out.iter().map(|v| v * scale.0));
        })?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { iteration: it });
        }
        history.push(loss);
        observer(&DipSnapshot {
            iteration: it,
            loss,
            chi: &chi,
        });
        if it < sched.iters {
            rms.step(&mut net.params, &grads)?;
        } else {
            crate::autodiff::gd_step(&mut net.params, &grads, sched.gd_lr)?;
        }
    }
    let out = generator_forward(net)?;
    Ok(DipResult {
        chi: denormalize(&mu.like(out.values), scale),
        loss_history: history,
        iterations_run: total,
    })
}

fn loss_and_grads(
    net: &GeneratorNet,
    target: &Tensor1D,
    mut peek: impl FnMut(&[f64]),
) -> Result<(f64, Vec<Tensor1D>)> {
    let mut tape = Tape::new();
    let (out, vars) = net.record(&mut tape)?;
    peek(&tape.value(out).values);
    let t = tape.constant(target.clone());
    let loss = tape.mse_loss(out, t)?;
    let value = tape.value(loss).values[0];
    let grads: Gradients = tape.backward(loss)?;
    Ok((value, grads.collect(&vars)))
}

/// Mean-squared loss of the generator output against `target` together with
/// the parameter gradients, in `params` order.
pub fn generator_loss(net: &GeneratorNet, target: &Signal) -> Result<(f64, Vec<Tensor1D>)> {
    loss_and_grads(net, &Tensor1D::row_vector(target.values.clone()), |_| {})
}

/// A strided-convolution critic mirroring the generator. It is built and can
/// score a signal but takes no part in fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    pub filters: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    params: Vec<Tensor1D>,
    n_conv: usize,
}

impl Discriminator {
    pub fn new(length: usize, filters: usize, n_conv: usize, seed: u64) -> Result<Self> {
        let (kernel, stride, padding) = (4, 2, 1);
        let mut len = length;
        let mut params = Vec::new();
        let mut wrng = RngStream::tagged(seed, tags::GENERATOR_WEIGHTS, 1).sampler();
        for i in 0..n_conv {
            if len + 2 * padding < kernel {
                return Err(Error::Config(format!(
                    "discriminator input of length {length} collapses at layer {i}"
                )));
            }
            len = (len + 2 * padding - kernel) / stride + 1;
            let cin = if i == 0 { 1 } else { filters };
            let values = (0..cin * filters * kernel)
                .map(|_| 0.02 * wrng.standard_normal())
                .collect();
            params.push(Tensor1D::new(cin * filters, kernel, values)?);
            if i > 0 {
                params.push(Tensor1D::filled(filters, 1, 1.0));
                params.push(Tensor1D::zeros(filters, 1));
            }
        }
        let values = (0..filters * len)
            .map(|_| 0.02 * wrng.standard_normal())
            .collect();
        params.push(Tensor1D::new(1, filters * len, values)?);
        Ok(Discriminator {
            filters,
            kernel,
            stride,
            padding,
            params,
            n_conv,
        })
    }

    /// Probability-like score in `(0, 1)`.
    pub fn score(&self, signal: &[f64]) -> Result<f64> {
        let mut tape = Tape::new();
        let vars = tape.params(&self.params);
        let mut h = tape.constant(Tensor1D::row_vector(signal.to_vec()));
        let mut p = 0;
        for i in 0..self.n_conv {
            h = tape.conv_1d(h, vars[p], self.filters, self.stride, self.padding)?;
            p += 1;
            if i > 0 {
                h = tape.batch_norm_1d(h, vars[p], vars[p + 1], 1e-5, &BnMode::Train)?;
                p += 2;
            }
            h = tape.activation(h, Activation::LeakyRelu(Activation::LEAKY_SLOPE));
        }
        let flat = tape.value(h).values.clone();
        let flat = tape.constant(Tensor1D::column(flat));
        let logit = tape.linear(vars[p], flat, None)?;
        Ok(math::sigmoid(tape.value(logit).values[0]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn preset_lengths() {
        let cfg = GeneratorConfig::preset(1);
        assert_eq!(cfg.native_length(), 1024);
        cfg.validate().unwrap();
        let single = GeneratorConfig {
            latent_length: 512,
            n_layers: 1,
            ..cfg
        };
        assert_eq!(single.native_length(), 1024);
        single.validate().unwrap();
    }

    #[test]
    fn bad_geometry_lists_lengths() {
        let cfg = GeneratorConfig {
            output_length: 1000,
            ..GeneratorConfig::preset(1)
        };
        let Err(Error::Config(msg)) = cfg.validate() else {
            panic!("expected config error");
        };
        assert!(msg.contains("32 -> 64 -> 128 -> 256 -> 512 -> 1024"), "{msg}");
    }

    #[test]
    fn for_length_crops_minimally() {
        for len in [250, 400, 600, 800, 1024] {
            let cfg = GeneratorConfig::for_length(len, 0);
            cfg.validate().unwrap();
            assert!(cfg.native_length() >= len);
            assert!(cfg.native_length() - len < 32);
        }
        assert!(!GeneratorConfig::for_length(1024, 0).crop);
    }

    #[test]
    fn seeded_construction_is_reproducible() {
        let cfg = GeneratorConfig::preset(9);
        assert_eq!(build_generator(&cfg).unwrap(), build_generator(&cfg).unwrap());
        let other = build_generator(&GeneratorConfig::preset(10)).unwrap();
        assert_ne!(build_generator(&cfg).unwrap().params, other.params);
    }

    #[test]
    fn forward_range_and_zero_weights() {
        let cfg = GeneratorConfig::preset(3);
        let mut net = build_generator(&cfg).unwrap();
        let out = generator_forward(&net).unwrap();
        assert_eq!(out.len(), 1024);
        assert!(out.values.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert_eq!(out, generator_forward(&net).unwrap());
        for p in net.params.iter_mut() {
            p.values.iter_mut().for_each(|v| *v = 0.0);
        }
        assert!(generator_forward(&net).unwrap().values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn normalize_round_trip() {
        let s = Signal::new(vec![-20.0, 10.0], 0.1);
        let (n, scale) = normalize(&s).unwrap();
        assert_eq!(n.values, vec![-1.0, 0.5]);
        assert_eq!(scale, Scale(20.0));
        assert_eq!(denormalize(&n, scale), s);
        let z = Signal::new(vec![0.0; 3], 0.1);
        assert_eq!(normalize(&z).unwrap(), (z.clone(), Scale(1.0)));
        let odd = Signal::new(vec![0.3, -7.123456789, 2.2], 0.1);
        let (n, scale) = normalize(&odd).unwrap();
        for (a, b) in denormalize(&n, scale).values.iter().zip(&odd.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn discriminator_scores_in_unit_interval() {
        let d = Discriminator::new(64, 8, 3, 1).unwrap();
        let s = d.score(&[0.1; 64]).unwrap();
        assert!(s > 0.0 && s < 1.0);
    }
}
