use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use dcs::config;
use dcs::experiments::{Receiver, Run, Source};
use dcs::oracle::Mutation;
use dcs::selftest;
use dcs::HarnessError;

#[derive(Parser)]
#[command(name = "dcs", version, about = "Deep chaos synchronization simulator")]
struct Cli {
    /// Configuration file; the built-in preset when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides CHAOS_SYNC_OUT and output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Drive map.
    #[arg(long, global = true, value_enum)]
    map: Option<MapArg>,
    /// Samples per signal.
    #[arg(long = "T", global = true)]
    t: Option<usize>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Channel noise power for single-signal subcommands.
    #[arg(long, global = true, default_value_t = 0.5)]
    sigma2: f64,
    /// Noise seed (overrides noise.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Noise realization index for single-signal subcommands.
    #[arg(long, global = true, default_value_t = 0)]
    realization: u32,
    /// Config override `section.key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Progress on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum MapArg {
    Lorenz,
    Rossler,
    Henon,
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    Clean,
    Raw,
    Dip,
    Rnn,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReceiverArg {
    Dcs,
    Rnn,
    GaOnly,
    Conventional,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutationArg {
    FlipTanhGradient,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the clean drive trajectory (t, x, y, z).
    Generate,
    /// Write the drive and its noisy copy.
    Corrupt,
    /// Denoise the received drive with an untrained generator.
    DenoiseDip,
    /// Denoise the received drive with the trained RNN.
    DenoiseRnn,
    /// Train the RNN denoiser and cache its weights.
    TrainRnn {
        /// Retrain even when cached weights exist.
        #[arg(long)]
        force: bool,
    },
    /// Estimate x0 by genetic search.
    EstimateX0 {
        #[arg(long, value_enum, default_value = "raw")]
        from: SourceArg,
    },
    /// Run one receiver end to end.
    Receive {
        #[arg(long, value_enum, default_value = "dcs")]
        receiver: ReceiverArg,
    },
    /// Sync error per noise power for the DCS, RNN and conventional receivers.
    Table3,
    /// Generator-fit convergence and drive-map comparison.
    Fig7,
    /// Sync error versus segment length.
    Fig10,
    /// Fast correctness checks.
    Selftest {
        /// Inject a known fault to confirm the checks catch it.
        #[arg(long, value_enum)]
        mutate: Option<MutationArg>,
    },
}

fn load(cli: &Cli) -> Result<Run, HarnessError> {
    let mut overrides = Vec::new();
    if let Some(m) = cli.map {
        let name = match m {
            MapArg::Lorenz => "lorenz",
            MapArg::Rossler => "rossler",
            MapArg::Henon => "henon",
        };
        overrides.push(format!("signal.map=\"{name}\""));
    }
    if let Some(t) = cli.t {
        overrides.push(format!("signal.length={t}"));
    }
    if let Some(dt) = cli.dt {
        overrides.push(format!("signal.dt={dt:?}"));
    }
    if let Some(seed) = cli.seed {
        overrides.push(format!("noise.seed={seed}"));
    }
    overrides.extend(cli.set.iter().cloned());
    let cfg = config::load(cli.config.as_deref(), &overrides)?;
    let out_dir = cli.out.clone().unwrap_or_else(|| cfg.out_dir());
    let mut run = Run::new(cfg, out_dir);
    run.verbose = cli.verbose;
    Ok(run)
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    let run = load(cli)?;
    let kind = run.cfg.signal.map;
    let (s2, r) = (cli.sigma2, cli.realization);
    match &cli.cmd {
        Cmd::Generate => {
            let (t, path) = run.generate(kind)?;
            println!("generate: {} samples of the {} drive -> {}", t.rows.len(), kind.name(), path.display());
        }
        Cmd::Corrupt => {
            let (t, path) = run.corrupt(kind, s2, r)?;
            println!("corrupt: {} samples at sigma2={s2} -> {}", t.rows.len(), path.display());
        }
        Cmd::DenoiseDip => {
            let (amp, raw, path) = run.denoise_dip(kind, s2, r)?;
            println!("denoise-dip: amplitude error {amp:.6} (raw {raw:.6}) -> {}", path.display());
        }
        Cmd::DenoiseRnn => {
            let (amp, raw, path) = run.denoise_rnn(kind, s2, r)?;
            println!("denoise-rnn: amplitude error {amp:.6} (raw {raw:.6}) -> {}", path.display());
        }
        Cmd::TrainRnn { force } => {
            let t = run.train_rnn(*force)?;
            match t.loss {
                Some(l) => println!(
                    "train-rnn: {} iterations, final loss {:.6} -> {}",
                    l.len(),
                    l.last().copied().unwrap_or(f64::NAN),
                    t.path.display()
                ),
                None => println!("train-rnn: cached weights at {}", t.path.display()),
            }
        }
        Cmd::EstimateX0 { from } => {
            let src = match from {
                SourceArg::Clean => Source::Clean,
                SourceArg::Raw => Source::Raw,
                SourceArg::Dip => Source::Dip,
                SourceArg::Rnn => Source::Rnn,
            };
            let (ga, path) = run.estimate_x0(kind, s2, r, src)?;
            println!(
                "estimate-x0: x0_hat {:.6} (fitness {:.3e}) -> {}",
                ga.x0_hat,
                ga.best_fitness,
                path.display()
            );
        }
        Cmd::Receive { receiver } => {
            let rc = match receiver {
                ReceiverArg::Dcs => Receiver::Dcs,
                ReceiverArg::Rnn => Receiver::Rnn,
                ReceiverArg::GaOnly => Receiver::GaOnly,
                ReceiverArg::Conventional => Receiver::Conventional,
            };
            let (err, x0, path) = run.receive(rc, kind, s2, r)?;
            println!(
                "receive: {} sync error {err:.6}, x0_hat {x0:.6} -> {}",
                rc.name(),
                path.display()
            );
        }
        Cmd::Table3 => {
            let t = run.table3()?;
            let col = |c: &str| t.means.column(c).unwrap_or_default();
            let avg = |v: Vec<f64>| v.iter().sum::<f64>() / v.len().max(1) as f64;
            println!(
                "table3: {} rows, mean sync error dcs {:.5} rnn {:.5} conventional {:.5} -> {}",
                t.means.rows.len(),
                avg(col("dcs")),
                avg(col("rnn")),
                avg(col("conventional")),
                t.path.display()
            );
        }
        Cmd::Fig7 => {
            let f = run.fig7()?;
            println!(
                "fig7: {} loss series, {} map runs -> {}",
                f.loss.columns.len() - 1,
                f.maps.rows.len(),
                run.out_dir.display()
            );
        }
        Cmd::Fig10 => {
            let t = run.fig10()?;
            println!("fig10: {} segment lengths -> {}", t.rows.len(), run.out_dir.join("fig10.csv").display());
        }
        Cmd::Selftest { mutate } => {
            let mutation = match mutate {
                Some(MutationArg::FlipTanhGradient) => Mutation::FlipTanhGradient,
                None => Mutation::None,
            };
            let checks = selftest::run_all(&run.cfg, mutation);
            for c in &checks {
                println!("{}", c.line());
            }
            let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
            let total: f64 = checks.iter().map(|c| c.seconds).sum();
            if !failed.is_empty() {
                return Err(HarnessError::Checks(failed)).context("selftest");
            }
            println!("selftest: {} checks passed in {total:.1}s", checks.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = e.chain().any(|c| {
                c.is::<config::ConfigError>()
                    || matches!(c.downcast_ref::<HarnessError>(), Some(HarnessError::Config(_)))
            });
            ExitCode::from(if config_error { 2 } else { 1 })
        }
    }
}
