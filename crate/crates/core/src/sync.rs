//! Complete receivers and the error metrics used to compare them.
//!
//! Every receiver turns the noisy drive `mu` into reconstructed attractor
//! components `xr, yr, zr` on the same time grid. They differ in how the
//! drive is cleaned before the initial value `x0` is estimated:
//!
//! * DCS: untrained generator fit ([`crate::dip`]), then genetic search.
//! * RNN: trained encoder/decoder ([`crate::rnn`]), then genetic search.
//! * GA-only: genetic search directly on `mu`.
//! * Conventional: no estimation; `mu` drives the response subsystem and the
//!   master x orbit starts from a random guess.

use alloc::vec::Vec;

use crate::channel::{tags, RngStream};
use crate::dip::{build_generator, dip_optimize, DipSchedule, GeneratorConfig};
use crate::dynamics::{integrate_response, ChaoticMap, DriveCoupling, Rk4, State3, Trajectory3};
use crate::error::{Error, Result};
use crate::ga::{ga_run, FitnessContext, GaConfig, GaResult};
use crate::math;
use crate::rnn::{rnn_denoise, Seq2SeqModel};
use crate::signal::Signal;

/// Default evaluation span in samples.
pub const DEFAULT_SPAN: usize = 250;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMetric {
    #[default]
    Mae,
    Rmse,
}

/// How `yr, zr` are produced once `x0` has been estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reconstruction {
    /// Rerun the drive system from `(x0_hat, y0, z0)` and take all three
    /// components.
    #[default]
    EstimatedOrbit,
    /// Drive the response subsystem with the cleaned signal (Lorenz only).
    DrivenResponse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverConfig {
    pub map: ChaoticMap,
    pub rk4: Rk4,
    /// Initial `y, z` shared by transmitter and receiver.
    pub known_y0: f64,
    pub known_z0: f64,
    pub coupling: DriveCoupling,
    pub reconstruction: Reconstruction,
    /// Samples compared by the genetic objective.
    pub fitness_span: usize,
}

impl ReceiverConfig {
    pub fn lorenz(dt: f64) -> Self {
        ReceiverConfig {
            map: ChaoticMap::Lorenz(Default::default()),
            rk4: Rk4::new(dt),
            known_y0: 0.1,
            known_z0: 0.1,
            coupling: DriveCoupling::Reseed,
            reconstruction: Reconstruction::EstimatedOrbit,
            fitness_span: DEFAULT_SPAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverOutput {
    /// The cleaned drive, when the receiver produces one.
    pub chi: Option<Signal>,
    pub x0_hat: f64,
    pub xr: Signal,
    pub yr: Signal,
    pub zr: Signal,
    pub ga: Option<GaResult>,
    pub dip_loss: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub avg_amplitude_error: f64,
    pub avg_sync_error: f64,
    pub span: usize,
    /// Seconds; filled in by callers that can read a clock.
    pub wall_clock: f64,
}

fn check_pair(op: &'static str, a: &Signal, b: &Signal) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            op,
            left: (1, a.len()),
            right: (1, b.len()),
        });
    }
    Ok(())
}

fn metric_over(metric: ErrorMetric, a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    match metric {
        ErrorMetric::Mae => a.iter().zip(b).map(|(p, q)| (p - q).abs()).sum::<f64>() / n,
        ErrorMetric::Rmse => {
            math::sqrt(a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / n)
        }
    }
}

/// Mean of `|x − chi|` over all samples.
pub fn avg_amplitude_error(x: &Signal, chi: &Signal) -> Result<f64> {
    amplitude_error_with(ErrorMetric::Mae, x, chi)
}

pub fn amplitude_error_with(metric: ErrorMetric, x: &Signal, chi: &Signal) -> Result<f64> {
    check_pair("avg_amplitude_error", x, chi)?;
    x.ensure_nonempty("signal")?;
    Ok(metric_over(metric, &x.values, &chi.values))
}

/// Mean of `|z − zr|` over the first `span` samples.
pub fn avg_sync_error(z: &Signal, zr: &Signal, span: usize) -> Result<f64> {
    sync_error_with(ErrorMetric::Mae, z, zr, span)
}

pub fn sync_error_with(metric: ErrorMetric, z: &Signal, zr: &Signal, span: usize) -> Result<f64> {
    if span == 0 {
        return Err(Error::domain("evaluation span must be >= 1"));
    }
    if span > z.len() || span > zr.len() {
        return Err(Error::Shape {
            op: "avg_sync_error",
            left: (z.len(), zr.len()),
            right: (1, span),
        });
    }
    Ok(metric_over(metric, &z.values[..span], &zr.values[..span]))
}

/// Amplitude error of the cleaned drive (or of `mu` itself when the receiver
/// has none) and the z sync error over `span` samples.
pub fn evaluate(
    clean: &Trajectory3,
    mu: &Signal,
    out: &ReceiverOutput,
    span: usize,
    metric: ErrorMetric,
) -> Result<MetricsReport> {
    let x = clean.x();
    let chi = out.chi.as_ref().unwrap_or(mu);
    Ok(MetricsReport {
        avg_amplitude_error: amplitude_error_with(metric, &x, chi)?,
        avg_sync_error: sync_error_with(metric, &clean.z(), &out.zr, span)?,
        span,
        wall_clock: 0.0,
    })
}

fn orbit(cfg: &ReceiverConfig, x0: f64, like: &Signal) -> Result<Trajectory3> {
    let s0 = State3::new(x0, cfg.known_y0, cfg.known_z0);
    let mut t = cfg.map.trajectory(s0, like.len(), &cfg.rk4)?;
    t.dt = like.dt;
    t.t0 = like.t0;
    Ok(t)
}

fn lorenz_params(cfg: &ReceiverConfig, what: &str) -> Result<crate::dynamics::LorenzParams> {
    match cfg.map {
        ChaoticMap::Lorenz(p) => Ok(p),
        other => Err(Error::Config(alloc::format!(
            "{what} is defined for the lorenz drive only, not {}",
            other.name()
        ))),
    }
}

fn reconstruct(cfg: &ReceiverConfig, drive: &Signal, x0_hat: f64) -> Result<(Signal, Signal, Signal)> {
    let t = orbit(cfg, x0_hat, drive)?;
    match cfg.reconstruction {
        Reconstruction::EstimatedOrbit => Ok((t.x(), t.y(), t.z())),
        Reconstruction::DrivenResponse => {
            let p = lorenz_params(cfg, "driven-response reconstruction")?;
            let (yr, zr) = integrate_response(
                drive,
                (cfg.known_y0, cfg.known_z0),
                &p,
                cfg.rk4.substeps,
                cfg.coupling,
            )?;
            Ok((t.x(), yr, zr))
        }
    }
}

fn estimate_and_reconstruct(
    cfg: &ReceiverConfig,
    chi: Signal,
    ga_cfg: &GaConfig,
) -> Result<ReceiverOutput> {
    let span = cfg.fitness_span.min(chi.len());
    let ga = FitnessContext::new(&chi, cfg.known_y0, cfg.known_z0, cfg.map, cfg.rk4, span)
        .and_then(|ctx| ga_run(&ctx, ga_cfg))
        .map_err(|e| e.in_stage("initial-value estimation"))?;
    let (xr, yr, zr) =
        reconstruct(cfg, &chi, ga.x0_hat).map_err(|e| e.in_stage("reconstruction"))?;
    Ok(ReceiverOutput {
        chi: Some(chi),
        x0_hat: ga.x0_hat,
        xr,
        yr,
        zr,
        ga: Some(ga),
        dip_loss: None,
    })
}

/// Generator fit, genetic estimation of `x0`, reconstruction.
pub fn dcs_receive(
    mu: &Signal,
    gen_cfg: &GeneratorConfig,
    sched: &DipSchedule,
    ga_cfg: &GaConfig,
    cfg: &ReceiverConfig,
) -> Result<ReceiverOutput> {
    mu.ensure_nonempty("received signal")?;
    let (chi, loss) = build_generator(gen_cfg)
        .and_then(|mut net| dip_optimize(&mut net, mu, sched))
        .map(|r| (r.chi, r.loss_history))
        .map_err(|e| e.in_stage("denoising"))?;
    let mut out = estimate_and_reconstruct(cfg, chi, ga_cfg)?;
    out.dip_loss = Some(loss);
    Ok(out)
}

/// Trained-RNN cleaning, genetic estimation of `x0`, reconstruction.
pub fn rnn_receive(
    model: &Seq2SeqModel,
    mu: &Signal,
    ga_cfg: &GaConfig,
    cfg: &ReceiverConfig,
) -> Result<ReceiverOutput> {
    let chi = rnn_denoise(model, mu).map_err(|e| e.in_stage("denoising"))?;
    estimate_and_reconstruct(cfg, chi, ga_cfg)
}

/// Genetic estimation directly on the noisy drive.
pub fn ga_only_receive(mu: &Signal, ga_cfg: &GaConfig, cfg: &ReceiverConfig) -> Result<ReceiverOutput> {
    mu.ensure_nonempty("received signal")?;
    let mut out = estimate_and_reconstruct(cfg, mu.clone(), ga_cfg)?;
    out.chi = None;
    Ok(out)
}

/// The raw drive feeds the response subsystem; `xr` is the master orbit from
/// the guessed `x0`.
pub fn conventional_receive(mu: &Signal, x0_guess: f64, cfg: &ReceiverConfig) -> Result<ReceiverOutput> {
    mu.ensure_nonempty("received signal")?;
    let p = lorenz_params(cfg, "the conventional receiver")?;
    let xr = orbit(cfg, x0_guess, mu)?.x();
    let (yr, zr) = integrate_response(mu, (cfg.known_y0, cfg.known_z0), &p, cfg.rk4.substeps, cfg.coupling)
        .map_err(|e| e.in_stage("response"))?;
    Ok(ReceiverOutput {
        chi: None,
        x0_hat: x0_guess,
        xr,
        yr,
        zr,
        ga: None,
        dip_loss: None,
    })
}

/// Uniform guess in `[lower, upper]` from the trial's own stream.
pub fn initial_guess(seed: u64, trial: u32, lower: f64, upper: f64) -> f64 {
    RngStream::tagged(seed, tags::INITIAL_GUESS, trial)
        .sampler()
        .uniform_in(lower, upper)
}

/// One randomly placed segment handed to a receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentTrial {
    pub length: usize,
    pub trial: u32,
    pub start: usize,
    pub clean: Trajectory3,
}

/// Mean error per `(length, receiver)`; `errors[i][j]` is length `i`,
/// receiver `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentTable {
    pub lengths: Vec<usize>,
    pub n_receivers: usize,
    pub errors: Vec<Vec<f64>>,
}

/// For each length draws `trials` contiguous segments of `source` and
/// averages `run(receiver, segment)` over them.
pub fn segment_experiment<F>(
    source: &Trajectory3,
    lengths: &[usize],
    trials: u32,
    n_receivers: usize,
    seed: u64,
    mut run: F,
) -> Result<SegmentTable>
where
    F: FnMut(usize, &SegmentTrial) -> Result<f64>,
{
    if trials == 0 || n_receivers == 0 {
        return Err(Error::Config("segment experiment needs trials and receivers".into()));
    }
    if let Some(bad) = lengths.iter().find(|l| **l == 0 || **l > source.len()) {
        return Err(Error::Config(alloc::format!(
            "segment length {bad} does not fit a source of {} samples",
            source.len()
        )));
    }
    let mut errors = Vec::with_capacity(lengths.len());
    for (li, &length) in lengths.iter().enumerate() {
        let mut rng = RngStream::tagged(seed, tags::SEGMENT_STARTS, li as u32).sampler();
        let mut sums = alloc::vec![0.0; n_receivers];
        for trial in 0..trials {
            let start = rng.below(source.len() - length + 1);
            let mut clean = source.slice(start, length)?;
            clean.t0 = 0.0;
            let seg = SegmentTrial {
                length,
                trial,
                start,
                clean,
            };
            for (r, sum) in sums.iter_mut().enumerate() {
                *sum += run(r, &seg)?;
            }
        }
        errors.push(sums.into_iter().map(|s| s / trials as f64).collect());
    }
    Ok(SegmentTable {
        lengths: lengths.to_vec(),
        n_receivers,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn metric_examples() {
        let a = Signal::new(vec![0.0, 0.0], 0.1);
        let b = Signal::new(vec![1.0, -1.0], 0.1);
        assert_eq!(avg_amplitude_error(&a, &a).unwrap(), 0.0);
        assert_eq!(avg_amplitude_error(&a, &b).unwrap(), 1.0);
        let neg = |s: &Signal| s.like(s.values.iter().map(|v| -v).collect());
        let c = Signal::new(vec![0.3, -2.0], 0.1);
        assert_eq!(
            avg_amplitude_error(&c, &b).unwrap(),
            avg_amplitude_error(&neg(&c), &neg(&b)).unwrap()
        );
        assert!(avg_amplitude_error(&a, &Signal::new(vec![1.0], 0.1)).is_err());

        let z = Signal::new(vec![1.0, 1.0], 0.1);
        let zr = Signal::new(vec![0.0, 2.0], 0.1);
        assert_eq!(avg_sync_error(&z, &zr, 2).unwrap(), 1.0);
        assert_eq!(avg_sync_error(&z, &z, 1).unwrap(), 0.0);
        assert!(matches!(avg_sync_error(&z, &zr, 0), Err(Error::Domain(_))));
        assert!(avg_sync_error(&z, &zr, 3).is_err());
        assert_eq!(sync_error_with(ErrorMetric::Rmse, &z, &zr, 2).unwrap(), 1.0);
    }

    #[test]
    fn conventional_with_exact_start_is_exact() {
        let cfg = ReceiverConfig::lorenz(0.1);
        let t = cfg.map.trajectory(State3::new(0.1, 0.1, 0.1), 1024, &cfg.rk4).unwrap();
        let out = conventional_receive(&t.x(), 0.1, &cfg).unwrap();
        let z = t.z();
        let worst = z.values.iter().zip(&out.zr.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(worst < 1e-6, "{worst}");
        assert_eq!(out.xr, t.x());
    }

    #[test]
    fn conventional_rejects_other_maps() {
        let mut cfg = ReceiverConfig::lorenz(0.1);
        cfg.map = ChaoticMap::Henon(Default::default());
        let mu = Signal::new(vec![0.1; 4], 1.0);
        assert!(matches!(conventional_receive(&mu, 0.1, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn ga_only_noise_free_matches_truth() {
        let cfg = ReceiverConfig::lorenz(0.1);
        let t = cfg.map.trajectory(State3::new(0.1, 0.1, 0.1), 300, &cfg.rk4).unwrap();
        let ga_cfg = GaConfig {
            population_size: 2000,
            ..GaConfig::default()
        };
        let out = ga_only_receive(&t.x(), &ga_cfg, &cfg).unwrap();
        assert!((out.x0_hat - 0.1).abs() <= 1e-3);
        assert_eq!(out.zr.len(), 300);
        assert_eq!(out.zr.dt, 0.1);
    }

    #[test]
    fn segment_table_shape_and_starts() {
        let cfg = ReceiverConfig::lorenz(0.1);
        let t = cfg.map.trajectory(State3::new(0.1, 0.1, 0.1), 200, &cfg.rk4).unwrap();
        let mut starts = Vec::new();
        let table = segment_experiment(&t, &[50, 200], 3, 2, 7, |r, seg| {
            if r == 0 {
                starts.push(seg.start);
            }
            assert_eq!(seg.clean.len(), seg.length);
            Ok((r + 1) as f64)
        })
        .unwrap();
        assert_eq!(table.errors, vec![vec![1.0, 2.0], vec![1.0, 2.0]]);
        assert_eq!(&starts[3..], &[0, 0, 0]);
        assert!(segment_experiment(&t, &[201], 1, 1, 0, |_, _| Ok(0.0)).is_err());
    }
}
