//! Reference computations that share no code with the library under test:
//! an adaptive Dormand–Prince integrator and central finite differences.

use dcs_core::autodiff::{Activation, BnMode, Tape, Tensor1D, Var};
use dcs_core::channel::{RngStream, Sampler};
use dcs_core::dip::{build_generator, generator_loss, GeneratorConfig};
use dcs_core::rnn::{rnn_loss, RnnConfig, Seq2SeqModel};
use dcs_core::Signal;

/// Dormand–Prince 5(4) with elementary step control; advances `y` from `t0` to
/// `t1` under mixed tolerance `tol`.
pub fn dopri5<const N: usize>(
    f: impl Fn(&[f64; N]) -> [f64; N],
    mut y: [f64; N],
    t0: f64,
    t1: f64,
    tol: f64,
) -> [f64; N] {
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let mut t = t0;
    let mut h = (t1 - t0) / 16.0;
    while t < t1 {
        if t + h > t1 {
            h = t1 - t;
        }
        let mut k = [[0.0; N]; 7];
        for s in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                for i in 0..N {
                    ys[i] += h * A[s][j] * kj[i];
                }
            }
            k[s] = f(&ys);
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        for i in 0..N {
            let mut e = 0.0;
            for s in 0..7 {
                y5[i] += h * B5[s] * k[s][i];
                e += h * (B5[s] - B4[s]) * k[s][i];
            }
            let sc = tol * (1.0 + y[i].abs().max(y5[i].abs()));
            err = err.max((e / sc).abs());
        }
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    y
}

/// Lorenz samples every `dt` from `s0`, integrated to tolerance 1e-12.
pub fn lorenz_reference(rho: f64, r: f64, beta: f64, s0: [f64; 3], dt: f64, n: usize) -> Vec<[f64; 3]> {
    let f = |s: &[f64; 3]| [rho * (s[1] - s[0]), s[0] * (r - s[2]) - s[1], s[0] * s[1] - beta * s[2]];
    let mut out = Vec::with_capacity(n);
    let mut s = s0;
    out.push(s);
    for i in 1..n {
        s = dopri5(f, s, (i - 1) as f64 * dt, i as f64 * dt, 1e-12);
        out.push(s);
    }
    out
}

/// Faults injected into the analytic side of a gradient check, to show the
/// check can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    None,
    FlipTanhGradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    pub primitive: &'static str,
    pub instances: usize,
    /// Largest `‖analytic − numeric‖ / max(‖analytic‖, ‖numeric‖)` seen.
    pub worst_rel_error: f64,
    pub tolerance: f64,
    /// Draws discarded because the loss had a kink inside the stencil.
    pub rejected: usize,
}

impl GradReport {
    pub fn passed(&self) -> bool {
        self.worst_rel_error <= self.tolerance && self.rejected * 10 <= self.instances
    }
}

pub const FD_STEP: f64 = 1e-4;
pub const FD_TOLERANCE: f64 = 1e-5;

pub const PRIMITIVES: [&str; 18] = [
    "conv_transpose_1d",
    "conv_transpose_1d/strided3",
    "conv_1d",
    "batch_norm_1d/train",
    "batch_norm_1d/eval",
    "activation/relu",
    "activation/leaky_relu",
    "activation/tanh",
    "activation/sigmoid",
    "linear",
    "add",
    "scale",
    "gru_combine",
    "concat",
    "crop",
    "mse_loss",
    "generator",
    "gru_seq2seq",
];

fn rand_tensor(rng: &mut Sampler, c: usize, l: usize, avoid_zero: bool) -> Tensor1D {
    let values = (0..c * l)
        .map(|_| loop {
            let v = rng.standard_normal();
            if !avoid_zero || v.abs() > 0.05 {
                break v;
            }
        })
        .collect();
    Tensor1D::new(c, l, values).expect("shape")
}

type Builder = Box<dyn Fn(&mut Tape, &[Var]) -> dcs_core::Result<Var>>;

/// One instance: parameter tensors plus a function recording the op under
/// test followed by an MSE against a fixed random target.
fn instance(name: &str, rng: &mut Sampler) -> (Vec<Tensor1D>, Builder) {
    fn with_target(out_shape: (usize, usize), rng: &mut Sampler, f: impl Fn(&mut Tape, &[Var]) -> dcs_core::Result<Var> + 'static) -> Builder {
        let target = rand_tensor(rng, out_shape.0, out_shape.1, false);
        Box::new(move |tape, vars| {
            let y = f(tape, vars)?;
            let t = tape.constant(target.clone());
            tape.mse_loss(y, t)
        })
    }
    match name {
        "conv_transpose_1d" => {
            let p = vec![rand_tensor(rng, 2, 5, false), rand_tensor(rng, 6, 4, false)];
            (p, with_target((3, 10), rng, |t, v| t.conv_transpose_1d(v[0], v[1], 3, 2, 1)))
        }
        "conv_transpose_1d/strided3" => {
            let p = vec![rand_tensor(rng, 3, 4, false), rand_tensor(rng, 6, 5, false)];
            (p, with_target((2, 10), rng, |t, v| t.conv_transpose_1d(v[0], v[1], 2, 3, 2)))
        }
        "conv_1d" => {
            let p = vec![rand_tensor(rng, 3, 9, false), rand_tensor(rng, 6, 3, false)];
            (p, with_target((2, 5), rng, |t, v| t.conv_1d(v[0], v[1], 2, 2, 1)))
        }
        "batch_norm_1d/train" => {
            let p = vec![rand_tensor(rng, 3, 6, false), rand_tensor(rng, 3, 1, false), rand_tensor(rng, 3, 1, false)];
            (p, with_target((3, 6), rng, |t, v| t.batch_norm_1d(v[0], v[1], v[2], 1e-5, &BnMode::Train)))
        }
        "batch_norm_1d/eval" => {
            let mean: Vec<f64> = (0..3).map(|_| rng.standard_normal()).collect();
            let var: Vec<f64> = (0..3).map(|_| 0.5 + rng.uniform()).collect();
            let mode = BnMode::Eval { mean, var };
            let p = vec![rand_tensor(rng, 3, 6, false), rand_tensor(rng, 3, 1, false), rand_tensor(rng, 3, 1, false)];
            (p, with_target((3, 6), rng, move |t, v| t.batch_norm_1d(v[0], v[1], v[2], 1e-5, &mode)))
        }
        "activation/relu" | "activation/leaky_relu" | "activation/tanh" | "activation/sigmoid" => {
            let kind = match name {
                "activation/relu" => Activation::Relu,
                "activation/leaky_relu" => Activation::LeakyRelu(Activation::LEAKY_SLOPE),
                "activation/tanh" => Activation::Tanh,
                _ => Activation::Sigmoid,
            };
            let p = vec![rand_tensor(rng, 2, 7, true)];
            (p, with_target((2, 7), rng, move |t, v| Ok(t.activation(v[0], kind))))
        }
        "linear" => {
            let p = vec![rand_tensor(rng, 4, 3, false), rand_tensor(rng, 3, 1, false), rand_tensor(rng, 4, 1, false)];
            (p, with_target((4, 1), rng, |t, v| t.linear(v[0], v[1], Some(v[2]))))
        }
        "add" => {
            let p = vec![rand_tensor(rng, 2, 5, false), rand_tensor(rng, 2, 5, false)];
            (p, with_target((2, 5), rng, |t, v| t.add(v[0], v[1])))
        }
        "scale" => {
            let c = rng.standard_normal();
            let p = vec![rand_tensor(rng, 2, 5, false)];
            (p, with_target((2, 5), rng, move |t, v| Ok(t.scale(v[0], c))))
        }
        "gru_combine" => {
            let p = vec![rand_tensor(rng, 12, 1, false), rand_tensor(rng, 12, 1, false), rand_tensor(rng, 4, 1, false)];
            (p, with_target((4, 1), rng, |t, v| t.gru_combine(v[0], v[1], v[2])))
        }
        "concat" => {
            let p = vec![rand_tensor(rng, 2, 3, false), rand_tensor(rng, 2, 4, false)];
            (p, with_target((2, 7), rng, |t, v| t.concat(&[v[0], v[1]])))
        }
        "crop" => {
            let p = vec![rand_tensor(rng, 2, 8, false)];
            (p, with_target((2, 5), rng, |t, v| t.crop(v[0], 5)))
        }
        "mse_loss" => {
            let p = vec![rand_tensor(rng, 3, 4, false), rand_tensor(rng, 3, 4, false)];
            (p, Box::new(|t: &mut Tape, v: &[Var]| t.mse_loss(v[0], v[1])))
        }
        other => panic!("no gradient instance for {other}"),
    }
}

fn rel_error(a: &[f64], n: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(n).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(n));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

fn numeric_gradient(params: &[Tensor1D], loss: &dyn Fn(&[Tensor1D]) -> (f64, Vec<Tensor1D>), step: f64) -> Vec<f64> {
    let mut numeric = Vec::new();
    let mut p = params.to_vec();
    for ti in 0..p.len() {
        for i in 0..p[ti].values.len() {
            let orig = p[ti].values[i];
            p[ti].values[i] = orig + step;
            let up = loss(&p).0;
            p[ti].values[i] = orig - step;
            let down = loss(&p).0;
            p[ti].values[i] = orig;
            numeric.push((up - down) / (2.0 * step));
        }
    }
    numeric
}

/// Relative error between the analytic gradient and central differences at
/// [`FD_STEP`], or `None` when the loss is not smooth inside the stencil
/// (differences at `FD_STEP` and `FD_STEP / 10` disagree, as happens when a
/// ReLU input lies within one step of zero).
fn compare(params: &[Tensor1D], loss: &dyn Fn(&[Tensor1D]) -> (f64, Vec<Tensor1D>), flip: bool) -> Option<f64> {
    let (_, grads) = loss(params);
    let mut analytic: Vec<f64> = grads.iter().flat_map(|g| g.values.iter().copied()).collect();
    if flip {
        analytic.iter_mut().for_each(|g| *g = -*g);
    }
    let coarse = numeric_gradient(params, loss, FD_STEP);
    let fine = numeric_gradient(params, loss, FD_STEP / 10.0);
    if rel_error(&coarse, &fine) > FD_TOLERANCE / 10.0 {
        return None;
    }
    Some(rel_error(&analytic, &coarse))
}

fn tape_loss(build: &Builder) -> impl Fn(&[Tensor1D]) -> (f64, Vec<Tensor1D>) + '_ {
    move |params| {
        let mut tape = Tape::new();
        let vars = tape.params(params);
        let loss = build(&mut tape, &vars).expect("recording");
        let value = tape.value(loss).values[0];
        let grads = tape.backward(loss).expect("backward");
        (value, grads.collect(&vars))
    }
}

fn small_generator(seed: u64) -> GeneratorConfig {
    GeneratorConfig {
        latent_channels: 3,
        latent_length: 4,
        filters: 4,
        n_layers: 3,
        output_length: 30,
        crop: true,
        weight_std: 0.5,
        ..GeneratorConfig::preset(seed)
    }
}

/// Checks `primitive` on `instances` random instances drawn from `seed`.
pub fn check_gradient(primitive: &'static str, instances: usize, seed: u64, mutation: Mutation) -> GradReport {
    let flip = mutation == Mutation::FlipTanhGradient && primitive == "activation/tanh";
    let tag = PRIMITIVES.iter().position(|p| *p == primitive).unwrap_or(99) as u32;
    let mut rng = RngStream::tagged(seed, 100 + tag, 0).sampler();
    let mut worst: f64 = 0.0;
    let mut rejected = 0;
    let mut accepted = 0;
    let mut k: u64 = 0;
    while accepted < instances && rejected * 10 <= instances {
        k += 1;
        let err = match primitive {
            "generator" => {
                let net = build_generator(&small_generator(seed + k)).expect("generator");
                let target = Signal::new(rand_tensor(&mut rng, 1, 30, false).values, 1.0);
                let loss = |p: &[Tensor1D]| {
                    let mut n = net.clone();
                    n.params = p.to_vec();
                    generator_loss(&n, &target).expect("generator loss")
                };
                compare(&net.params, &loss, flip)
            }
            "gru_seq2seq" => {
                let cfg = RnnConfig {
                    hidden: 3,
                    depth: 2,
                    decoder_sees_input: k % 2 == 0,
                    seed: seed + k,
                };
                let model = Seq2SeqModel::new(&cfg).expect("model");
                let seq: Vec<f64> = (0..5).map(|_| 0.5 * rng.standard_normal()).collect();
                let params: Vec<Tensor1D> = model.tensors().into_iter().cloned().collect();
                let loss = |p: &[Tensor1D]| {
                    let mut m = model.clone();
                    for (dst, src) in m.tensors_mut().into_iter().zip(p) {
                        dst.values.copy_from_slice(&src.values);
                    }
                    rnn_loss(&m, &seq).expect("rnn loss")
                };
                compare(&params, &loss, flip)
            }
            _ => {
                let (params, build) = instance(primitive, &mut rng);
                let loss = tape_loss(&build);
                compare(&params, &loss, flip)
            }
        };
        match err {
            Some(e) => {
                worst = worst.max(e);
                accepted += 1;
            }
            None => rejected += 1,
        }
    }
    GradReport {
        primitive,
        instances: accepted,
        worst_rel_error: worst,
        tolerance: FD_TOLERANCE,
        rejected,
    }
}
