//! The experiments behind each CLI subcommand. Every function writes its
//! files into the run's output directory and returns the tables it wrote.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dcs_core::channel::{awgn, tags, ChannelConfig, RngStream};
use dcs_core::dip::{build_generator, dip_optimize, dip_optimize_with, normalize, DipSchedule};
use dcs_core::dynamics::{State3, Trajectory3};
use dcs_core::ga::{ga_run, FitnessContext, GaResult};
use dcs_core::rnn::rnn_denoise;
use dcs_core::sync::{
    amplitude_error_with, conventional_receive, dcs_receive, evaluate, ga_only_receive,
    initial_guess, rnn_receive, segment_experiment, sync_error_with, ReceiverOutput,
};
use dcs_core::Signal;

use crate::config::{ExperimentConfig, MapKind};
use crate::plot::{Plot, Series};
use crate::table::{ResultTable, ARTIFACT_VERSION};
use crate::weights;
use crate::{HarnessError, Result};

/// A configured run rooted at one output directory.
pub struct Run {
    pub cfg: ExperimentConfig,
    pub out_dir: PathBuf,
    /// Progress lines on stderr.
    pub verbose: bool,
}

impl Run {
    pub fn new(cfg: ExperimentConfig, out_dir: PathBuf) -> Self {
        Run {
            cfg,
            out_dir,
            verbose: false,
        }
    }

    fn progress(&self, msg: impl FnOnce() -> String) {
        if self.verbose {
            eprintln!("{}", msg());
        }
    }

    /// `name` inside the output directory; plain file names only.
    pub fn path(&self, name: &str) -> Result<PathBuf> {
        let p = Path::new(name);
        if p.components().count() != 1 || p.file_name().is_none() {
            return Err(HarnessError::Io {
                path: p.to_path_buf(),
                source: std::io::Error::new(
                    std::io::ErrorKind::InvalidInput,
                    "output names must be plain file names",
                ),
            });
        }
        fs::create_dir_all(&self.out_dir).map_err(|source| HarnessError::Io {
            path: self.out_dir.clone(),
            source,
        })?;
        Ok(self.out_dir.join(p))
    }

    fn table<S: Into<String>>(&self, experiment: &str, columns: impl IntoIterator<Item = S>) -> ResultTable {
        ResultTable::new(columns)
            .with_meta("experiment", experiment)
            .with_meta("config_hash", self.cfg.hash())
            .with_meta("seed", self.cfg.noise.seed)
            .with_meta("artifact_version", ARTIFACT_VERSION)
    }

    fn emit(&self, table: &ResultTable, name: &str) -> Result<PathBuf> {
        let path = self.path(name)?;
        table.write(&path)?;
        Ok(path)
    }

    fn emit_plot(&self, plot: &Plot, name: &str) -> Result<PathBuf> {
        let path = self.path(name)?;
        plot.write(&path)?;
        Ok(path)
    }

    pub fn clean(&self, kind: MapKind) -> Result<Trajectory3> {
        let cfg = &self.cfg;
        Ok(cfg.map(kind).trajectory(cfg.init(kind), cfg.signal.length, &cfg.rk4())?)
    }

    pub fn received(&self, x: &Signal, sigma2: f64, realization: u32) -> Result<Signal> {
        let ch = ChannelConfig {
            sigma2,
            seed: self.cfg.noise.seed,
            realization,
        };
        Ok(awgn(x, &ch)?)
    }

    fn yz0(&self, kind: MapKind) -> (f64, f64) {
        let s = self.cfg.init(kind);
        (s.y, s.z)
    }

    pub fn generate(&self, kind: MapKind) -> Result<(ResultTable, PathBuf)> {
        let traj = self.clean(kind)?;
        let mut t = self.table("generate", ["t", "x", "y", "z"]).with_meta("map", kind.name());
        for (i, s) in traj.states.iter().enumerate() {
            t.push(vec![traj.time(i), s.x, s.y, s.z])?;
        }
        let path = self.emit(&t, &format!("{}_trajectory.csv", kind.name()))?;
        Ok((t, path))
    }

    pub fn corrupt(&self, kind: MapKind, sigma2: f64, realization: u32) -> Result<(ResultTable, PathBuf)> {
        let x = self.clean(kind)?.x();
        let mu = self.received(&x, sigma2, realization)?;
        let mut t = self
            .table("corrupt", ["t", "x", "mu"])
            .with_meta("map", kind.name())
            .with_meta("sigma2", sigma2)
            .with_meta("realization", realization);
        for i in 0..x.len() {
            t.push(vec![x.time(i), x.values[i], mu.values[i]])?;
        }
        let path = self.emit(&t, &format!("{}_received.csv", kind.name()))?;
        Ok((t, path))
    }

    pub fn denoise_dip(&self, kind: MapKind, sigma2: f64, realization: u32) -> Result<(f64, f64, PathBuf)> {
        let x = self.clean(kind)?.x();
        let mu = self.received(&x, sigma2, realization)?;
        let mut net = build_generator(&self.cfg.generator(x.len(), realization as u64))?;
        let res = dip_optimize(&mut net, &mu, &self.cfg.schedule())?;
        let chi = res.chi;
        let metric = self.cfg.metric();
        let amp = amplitude_error_with(metric, &x, &chi)?;
        let raw = amplitude_error_with(metric, &x, &mu)?;
        let mut t = self
            .table("denoise-dip", ["t", "x", "mu", "chi"])
            .with_meta("map", kind.name())
            .with_meta("sigma2", sigma2)
            .with_meta("realization", realization)
            .with_meta("amplitude_error", amp)
            .with_meta("raw_amplitude_error", raw);
        for i in 0..x.len() {
            t.push(vec![x.time(i), x.values[i], mu.values[i], chi.values[i]])?;
        }
        let path = self.emit(&t, &format!("{}_dip.csv", kind.name()))?;
        let mut lt = self.table("denoise-dip", ["iteration", "loss"]);
        for (i, l) in res.loss_history.iter().enumerate() {
            lt.push(vec![i as f64, *l])?;
        }
        self.emit(&lt, &format!("{}_dip_loss.csv", kind.name()))?;
        self.emit_plot(
            &Plot::from_table(&lt, "generator fit loss", "iteration", &["loss"]).log_y(true),
            &format!("{}_dip_loss.svg", kind.name()),
        )?;
        Ok((amp, raw, path))
    }

    pub fn train_rnn(&self, retrain: bool) -> Result<weights::Trained> {
        let trained = weights::load_or_train(&self.cfg, &self.out_dir, retrain)?;
        if let Some(loss) = &trained.loss {
            let mut t = self.table("train-rnn", ["iteration", "loss"]);
            for (i, l) in loss.iter().enumerate() {
                t.push(vec![i as f64, *l])?;
            }
            self.emit(&t, "rnn_train_loss.csv")?;
        }
        Ok(trained)
    }

    fn model(&self) -> Result<dcs_core::rnn::Seq2SeqModel> {
        self.progress(|| "loading or training the RNN denoiser".into());
        Ok(self.train_rnn(false)?.model)
    }

    pub fn denoise_rnn(&self, kind: MapKind, sigma2: f64, realization: u32) -> Result<(f64, f64, PathBuf)> {
        let model = self.model()?;
        let x = self.clean(kind)?.x();
        let mu = self.received(&x, sigma2, realization)?;
        let chi = rnn_denoise(&model, &mu)?;
        let metric = self.cfg.metric();
        let amp = amplitude_error_with(metric, &x, &chi)?;
        let raw = amplitude_error_with(metric, &x, &mu)?;
        let mut t = self
            .table("denoise-rnn", ["t", "x", "mu", "chi"])
            .with_meta("map", kind.name())
            .with_meta("sigma2", sigma2)
            .with_meta("realization", realization)
            .with_meta("amplitude_error", amp)
            .with_meta("raw_amplitude_error", raw);
        for i in 0..x.len() {
            t.push(vec![x.time(i), x.values[i], mu.values[i], chi.values[i]])?;
        }
        let path = self.emit(&t, &format!("{}_rnn.csv", kind.name()))?;
        Ok((amp, raw, path))
    }

    /// Genetic estimate of `x0` from the clean, raw or denoised drive.
    pub fn estimate_x0(&self, kind: MapKind, sigma2: f64, realization: u32, from: Source) -> Result<(GaResult, PathBuf)> {
        let x = self.clean(kind)?.x();
        let mu = self.received(&x, sigma2, realization)?;
        let chi = match from {
            Source::Clean => x.clone(),
            Source::Raw => mu,
            Source::Dip => {
                let mut net = build_generator(&self.cfg.generator(x.len(), realization as u64))?;
                dip_optimize(&mut net, &mu, &self.cfg.schedule())?.chi
            }
            Source::Rnn => rnn_denoise(&self.model()?, &mu)?,
        };
        let (y0, z0) = self.yz0(kind);
        let span = self.cfg.ga.fitness_span.min(chi.len());
        let ctx = FitnessContext::new(&chi, y0, z0, self.cfg.map(kind), self.cfg.rk4(), span)?;
        let ga = ga_run(&ctx, &self.cfg.ga_config(kind, realization as u64))?;
        let mut t = self
            .table("estimate-x0", ["generation", "best_fitness"])
            .with_meta("map", kind.name())
            .with_meta("source", from.name())
            .with_meta("sigma2", sigma2)
            .with_meta("x0_hat", ga.x0_hat)
            .with_meta("x0_true", self.cfg.init(kind).x);
        for (g, f) in ga.history.iter().enumerate() {
            t.push(vec![(g + 1) as f64, *f])?;
        }
        let path = self.emit(&t, &format!("{}_estimate_x0.csv", kind.name()))?;
        Ok((ga, path))
    }

    fn run_receiver(&self, receiver: Receiver, kind: MapKind, mu: &Signal, realization: u32) -> Result<ReceiverOutput> {
        let cfg = &self.cfg;
        let rc = cfg.receiver(kind, self.yz0(kind));
        let ga = cfg.ga_config(kind, realization as u64);
        Ok(match receiver {
            Receiver::Dcs => dcs_receive(mu, &cfg.generator(mu.len(), realization as u64), &cfg.schedule(), &ga, &rc)?,
            Receiver::Rnn => rnn_receive(&self.model()?, mu, &ga, &rc)?,
            Receiver::GaOnly => ga_only_receive(mu, &ga, &rc)?,
            Receiver::Conventional => {
                let (lo, hi) = cfg.ga_bounds(kind);
                conventional_receive(mu, initial_guess(cfg.noise.seed, realization, lo, hi), &rc)?
            }
        })
    }

    pub fn receive(&self, receiver: Receiver, kind: MapKind, sigma2: f64, realization: u32) -> Result<(f64, f64, PathBuf)> {
        let clean = self.clean(kind)?;
        let mu = self.received(&clean.x(), sigma2, realization)?;
        let out = self.run_receiver(receiver, kind, &mu, realization)?;
        let m = evaluate(&clean, &mu, &out, self.cfg.eval.span, self.cfg.metric())?;
        let chi = out.chi.clone().unwrap_or_else(|| mu.clone());
        let mut t = self
            .table("receive", ["t", "x", "y", "z", "mu", "chi", "xr", "yr", "zr"])
            .with_meta("map", kind.name())
            .with_meta("receiver", receiver.name())
            .with_meta("sigma2", sigma2)
            .with_meta("realization", realization)
            .with_meta("x0_hat", out.x0_hat)
            .with_meta("avg_sync_error", m.avg_sync_error)
            .with_meta("avg_amplitude_error", m.avg_amplitude_error)
            .with_meta("span", m.span);
        for (i, s) in clean.states.iter().enumerate() {
            t.push(vec![
                clean.time(i),
                s.x,
                s.y,
                s.z,
                mu.values[i],
                chi.values[i],
                out.xr.values[i],
                out.yr.values[i],
                out.zr.values[i],
            ])?;
        }
        let path = self.emit(&t, &format!("{}_receive_{}.csv", kind.name(), receiver.name()))?;
        Ok((m.avg_sync_error, out.x0_hat, path))
    }

    /// Sync error of the DCS, RNN and conventional receivers per noise power,
    /// averaged over the configured realizations of the Lorenz drive.
    pub fn table3(&self) -> Result<Table3> {
        let cfg = &self.cfg;
        let kind = MapKind::Lorenz;
        let clean = self.clean(kind)?;
        let x = clean.x();
        let model = self.model()?;
        let metric = cfg.metric();
        let span = cfg.eval.span;
        let n = cfg.noise.realizations;
        let mut means = self.table("table3", ["sigma2", "dcs", "rnn", "conventional"]);
        means = means
            .with_meta("metric", format!("{:?}", cfg.eval.metric).to_lowercase())
            .with_meta("span", span)
            .with_meta("realizations", n);
        let mut spread = self.table(
            "table3-spread",
            [
                "sigma2",
                "dcs_std",
                "rnn_std",
                "conventional_std",
                "dcs_amplitude",
                "rnn_amplitude",
                "raw_amplitude",
                "dcs_x0_error",
                "rnn_x0_error",
            ],
        );
        let x0 = cfg.init(kind).x;
        for &sigma2 in &cfg.noise.sigma2 {
            let mut errs: [Vec<f64>; 3] = Default::default();
            let mut amp = [0.0; 3];
            let mut x0_err = [0.0; 2];
            for r in 0..n {
                let mu = self.received(&x, sigma2, r)?;
                let outs = [
                    self.run_receiver(Receiver::Dcs, kind, &mu, r)?,
                    rnn_receive(&model, &mu, &cfg.ga_config(kind, r as u64), &cfg.receiver(kind, self.yz0(kind)))?,
                    self.run_receiver(Receiver::Conventional, kind, &mu, r)?,
                ];
                for (k, out) in outs.iter().enumerate() {
                    errs[k].push(sync_error_with(metric, &clean.z(), &out.zr, span)?);
                }
                amp[0] += amplitude_error_with(metric, &x, outs[0].chi.as_ref().unwrap_or(&mu))?;
                amp[1] += amplitude_error_with(metric, &x, outs[1].chi.as_ref().unwrap_or(&mu))?;
                amp[2] += amplitude_error_with(metric, &x, &mu)?;
                x0_err[0] += (outs[0].x0_hat - x0).abs();
                x0_err[1] += (outs[1].x0_hat - x0).abs();
                self.progress(|| {
                    format!(
                        "table3 sigma2={sigma2} realization={r}: dcs {:.5} rnn {:.5} conventional {:.5}",
                        errs[0][r as usize], errs[1][r as usize], errs[2][r as usize]
                    )
                });
            }
            let nf = n as f64;
            let (m, s): (Vec<f64>, Vec<f64>) = errs.iter().map(|e| mean_std(e)).unzip();
            means.push(vec![sigma2, m[0], m[1], m[2]])?;
            spread.push(vec![
                sigma2,
                s[0],
                s[1],
                s[2],
                amp[0] / nf,
                amp[1] / nf,
                amp[2] / nf,
                x0_err[0] / nf,
                x0_err[1] / nf,
            ])?;
        }
        let path = self.emit(&means, "table3.csv")?;
        self.emit(&spread, "table3_spread.csv")?;
        self.emit_plot(
            &Plot::from_table(&means, "average synchronization error", "sigma2", &["dcs", "rnn", "conventional"])
                .y_label("avg sync error"),
            "table3.svg",
        )?;
        Ok(Table3 {
            means,
            spread,
            path,
        })
    }

    /// Generator-fit convergence per noise power, and the DCS receiver on each
    /// configured drive map with wall-clock timing.
    pub fn fig7(&self) -> Result<Fig7> {
        let (loss, amplitude) = self.fig7_convergence()?;
        let maps = self.fig7_maps()?;
        Ok(Fig7 {
            loss,
            amplitude,
            maps,
        })
    }

    /// Loss and amplitude error of the generator fit every `snapshot_every`
    /// iterations, one series per noise power.
    pub fn fig7_convergence(&self) -> Result<(ResultTable, ResultTable)> {
        let cfg = &self.cfg;
        let f7 = &cfg.fig7;
        let x = self.clean(MapKind::Lorenz)?.x();
        let names: Vec<String> = f7.sigma2.iter().map(|s| format!("sigma2={s}")).collect();
        let mut loss_t = self.table("fig7-loss", std::iter::once("iteration".to_string()).chain(names.clone()));
        let mut amp_t = self.table("fig7-amplitude", std::iter::once("iteration".to_string()).chain(names.clone()));
        let sched = DipSchedule {
            iters: f7.iterations,
            gd_iters: 0,
            ..cfg.schedule()
        };
        let every = f7.snapshot_every;
        let n_snap = f7.iterations / every + 1;
        let mut loss_cols = Vec::new();
        let mut amp_cols = Vec::new();
        for &sigma2 in &f7.sigma2 {
            let mu = self.received(&x, sigma2, 0)?;
            let (_, scale) = normalize(&mu)?;
            let mut net = build_generator(&cfg.generator(x.len(), 0))?;
            let mut losses = Vec::with_capacity(n_snap);
            let mut amps = Vec::with_capacity(n_snap);
            let metric = cfg.metric();
            let res = dip_optimize_with(&mut net, &mu, &sched, |snap| {
                if snap.iteration % every == 0 {
                    losses.push(snap.loss);
                    amps.push(amplitude_error_with(metric, &x, &mu.like(snap.chi.to_vec())).unwrap_or(f64::NAN));
                }
            })?;
            if f7.iterations % every == 0 {
                let mse = res
                    .chi
                    .values
                    .iter()
                    .zip(&mu.values)
                    .map(|(c, m)| (c - m) * (c - m))
                    .sum::<f64>()
                    / mu.len() as f64;
                losses.push(mse / (scale.0 * scale.0));
                amps.push(amplitude_error_with(metric, &x, &res.chi)?);
            }
            self.progress(|| format!("fig7 sigma2={sigma2}: final amplitude error {:.5}", amps.last().copied().unwrap_or(f64::NAN)));
            loss_cols.push(losses);
            amp_cols.push(amps);
        }
        for i in 0..n_snap {
            let it = (i * every) as f64;
            let mut lr = vec![it];
            let mut ar = vec![it];
            for k in 0..f7.sigma2.len() {
                lr.push(loss_cols[k].get(i).copied().unwrap_or(f64::NAN));
                ar.push(amp_cols[k].get(i).copied().unwrap_or(f64::NAN));
            }
            loss_t.push(lr)?;
            amp_t.push(ar)?;
        }
        let cols: Vec<&str> = names.iter().map(String::as_str).collect();
        self.emit(&loss_t, "fig7_loss.csv")?;
        self.emit(&amp_t, "fig7_amplitude.csv")?;
        self.emit_plot(
            &Plot::from_table(&loss_t, "generator fit loss", "iteration", &cols).log_y(true).y_label("loss"),
            "fig7a_loss.svg",
        )?;
        self.emit_plot(
            &Plot::from_table(&amp_t, "average amplitude error", "iteration", &cols).y_label("avg amplitude error"),
            "fig7b_amplitude.svg",
        )?;
        Ok((loss_t, amp_t))
    }

    /// The DCS receiver on each configured map, `map_seeds` noise draws each.
    pub fn fig7_maps(&self) -> Result<ResultTable> {
        let cfg = &self.cfg;
        let f7 = &cfg.fig7;
        let mut maps_t = self.table(
            "fig7-maps",
            ["map", "seed", "amplitude_error", "raw_amplitude_error", "dcs_seconds"],
        );
        maps_t = maps_t.with_meta(
            "map_index",
            f7.maps.iter().enumerate().map(|(i, m)| format!("{i}={}", m.name())).collect::<Vec<_>>().join(" "),
        );
        for (mi, &kind) in f7.maps.iter().enumerate() {
            let clean = self.clean(kind)?;
            let xk = clean.x();
            for s in 0..f7.map_seeds {
                let mu = self.received(&xk, f7.map_sigma2, s)?;
                let start = Instant::now();
                let out = self.run_receiver(Receiver::Dcs, kind, &mu, s)?;
                let secs = start.elapsed().as_secs_f64();
                let metric = cfg.metric();
                let amp = amplitude_error_with(metric, &xk, out.chi.as_ref().unwrap_or(&mu))?;
                let raw = amplitude_error_with(metric, &xk, &mu)?;
                self.progress(|| format!("fig7 map={} seed={s}: amplitude {amp:.5} raw {raw:.5} {secs:.2}s", kind.name()));
                maps_t.push(vec![mi as f64, s as f64, amp, raw, secs])?;
            }
        }
        self.emit(&maps_t, "fig7_maps.csv")?;
        let bars: Vec<Series> = f7
            .maps
            .iter()
            .enumerate()
            .map(|(mi, kind)| {
                let rows: Vec<&Vec<f64>> = maps_t.rows.iter().filter(|r| r[0] == mi as f64).collect();
                Series {
                    name: kind.name().to_string(),
                    x: rows.iter().map(|r| r[1]).collect(),
                    y: rows.iter().map(|r| r[2]).collect(),
                }
            })
            .collect();
        self.emit_plot(
            &Plot {
                title: "amplitude error by drive map".into(),
                x_label: "seed".into(),
                y_label: "amplitude_error".into(),
                series: bars,
                log_y: false,
            },
            "fig7c_maps.svg",
        )?;
        Ok(maps_t)
    }

    /// Mean sync error over random segments of each configured length for the
    /// DCS, RNN and GA-only receivers, measured over the first `eval.span`
    /// samples of each segment.
    pub fn fig10(&self) -> Result<ResultTable> {
        let cfg = &self.cfg;
        let f10 = &cfg.fig10;
        let kind = MapKind::Lorenz;
        let source = self.clean(kind)?;
        let model = self.model()?;
        let metric = cfg.metric();
        let lengths = f10.lengths.clone();
        let trials = f10.trials;
        let table = segment_experiment(&source, &lengths, trials, 3, cfg.noise.seed, |recv, seg| {
            let li = lengths.iter().position(|l| *l == seg.length).unwrap_or(0) as u32;
            let idx = li * trials + seg.trial;
            let x = seg.clean.x();
            let s0: State3 = seg.clean.states[0];
            let mu = awgn(
                &x,
                &ChannelConfig {
                    sigma2: f10.sigma2,
                    seed: cfg.noise.seed,
                    realization: idx,
                },
            )?;
            let u = RngStream::tagged(cfg.noise.seed, tags::GA_BOUNDS, idx).sampler().uniform();
            let lower = s0.x - u * f10.bounds_width;
            let ga = dcs_core::ga::GaConfig {
                lower,
                upper: lower + f10.bounds_width,
                ..cfg.ga_config(kind, idx as u64)
            };
            let rc = cfg.receiver(kind, (s0.y, s0.z));
            let out = match recv {
                0 => dcs_receive(&mu, &cfg.generator(x.len(), idx as u64), &cfg.schedule(), &ga, &rc)?,
                1 => rnn_receive(&model, &mu, &ga, &rc)?,
                _ => ga_only_receive(&mu, &ga, &rc)?,
            };
            let e = sync_error_with(metric, &seg.clean.z(), &out.zr, cfg.eval.span.min(seg.length))?;
            self.progress(|| {
                format!(
                    "fig10 length={} trial={} start={} receiver={}: {e:.5}",
                    seg.length,
                    seg.trial,
                    seg.start,
                    ["dcs", "rnn", "ga_only"][recv]
                )
            });
            Ok(e)
        })?;
        let mut t = self
            .table("fig10", ["length", "dcs", "rnn", "ga_only"])
            .with_meta("sigma2", f10.sigma2)
            .with_meta("trials", trials);
        for (li, &l) in table.lengths.iter().enumerate() {
            let e = &table.errors[li];
            t.push(vec![l as f64, e[0], e[1], e[2]])?;
        }
        self.emit(&t, "fig10.csv")?;
        self.emit_plot(
            &Plot::from_table(&t, "sync error by segment length", "length", &["dcs", "rnn", "ga_only"])
                .y_label("avg sync error"),
            "fig10.svg",
        )?;
        Ok(t)
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Receiver {
    Dcs,
    Rnn,
    GaOnly,
    Conventional,
}

impl Receiver {
    pub fn name(self) -> &'static str {
        match self {
            Receiver::Dcs => "dcs",
            Receiver::Rnn => "rnn",
            Receiver::GaOnly => "ga-only",
            Receiver::Conventional => "conventional",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Clean,
    Raw,
    Dip,
    Rnn,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Clean => "clean",
            Source::Raw => "raw",
            Source::Dip => "dip",
            Source::Rnn => "rnn",
        }
    }
}

pub struct Table3 {
    pub means: ResultTable,
    pub spread: ResultTable,
    pub path: PathBuf,
}

pub struct Fig7 {
    pub loss: ResultTable,
    pub amplitude: ResultTable,
    pub maps: ResultTable,
}
