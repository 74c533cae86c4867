//! Experiment configuration: a TOML document with one table per concern.

use std::fmt;
use std::path::{Path, PathBuf};

use dcs_core::dip::{DipSchedule, GeneratorConfig};
use dcs_core::dynamics::{
    ChaoticMap, DriveCoupling, HenonParams, LorenzParams, Rk4, RosslerParams, RosslerVariant,
    State3,
};
use dcs_core::ga::GaConfig;
use dcs_core::rnn::{RnnConfig, TrainConfig};
use dcs_core::sync::{ErrorMetric, ReceiverConfig, Reconstruction};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// The configuration shipped with the binary.
pub const DEFAULT_PRESET: &str = include_str!("../presets/default.toml");

/// Environment variable that replaces `output.dir`.
pub const OUT_ENV: &str = "CHAOS_SYNC_OUT";

/// Invalid or unreadable configuration; the CLI maps it to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    Lorenz,
    Rossler,
    Henon,
}

impl MapKind {
    pub fn name(self) -> &'static str {
        match self {
            MapKind::Lorenz => "lorenz",
            MapKind::Rossler => "rossler",
            MapKind::Henon => "henon",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingKind {
    Reseed,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReconstructionKind {
    EstimatedOrbit,
    DrivenResponse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Mae,
    Rmse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    pub map: MapKind,
    pub length: usize,
    pub dt: f64,
    pub rk4_substeps: usize,
    pub coupling: CouplingKind,
    pub reconstruction: ReconstructionKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LorenzSection {
    pub rho: f64,
    pub r: f64,
    pub beta: f64,
    pub init: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosslerSection {
    pub omega: f64,
    pub standard: bool,
    pub init: [f64; 3],
    pub ga_bounds: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HenonSection {
    pub b: f64,
    pub beta: f64,
    pub init: [f64; 3],
    pub ga_bounds: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub sigma2: Vec<f64>,
    pub realizations: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipSection {
    pub latent_channels: usize,
    pub latent_length: usize,
    pub filters: usize,
    pub layers: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub iterations: usize,
    pub momentum: f64,
    pub learning_rate: f64,
    pub gd_iterations: usize,
    pub gd_learning_rate: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RnnSection {
    pub hidden: usize,
    pub depth: usize,
    pub input_dim: usize,
    pub output_dim: usize,
    pub training_signals: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub train_sigma2: f64,
    pub decoder_sees_input: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaSection {
    pub population_size: usize,
    pub variables: usize,
    pub generations: usize,
    pub crossover_fraction: f64,
    pub mutation_fraction: f64,
    pub lower: f64,
    pub upper: f64,
    pub digits: u32,
    pub tournament: usize,
    pub elitism: usize,
    pub fitness_span: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub span: usize,
    pub metric: MetricKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig7Section {
    pub sigma2: Vec<f64>,
    pub iterations: usize,
    pub snapshot_every: usize,
    pub maps: Vec<MapKind>,
    pub map_sigma2: f64,
    pub map_seeds: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig10Section {
    pub lengths: Vec<usize>,
    pub trials: u32,
    pub sigma2: f64,
    pub bounds_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub signal: SignalSection,
    pub lorenz: LorenzSection,
    pub rossler: RosslerSection,
    pub henon: HenonSection,
    pub noise: NoiseSection,
    pub dip: DipSection,
    pub rnn: RnnSection,
    pub ga: GaSection,
    pub eval: EvalSection,
    pub fig7: Fig7Section,
    pub fig10: Fig10Section,
    pub output: OutputSection,
}

fn cfg_err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Parses `text`, applies `key=value` overrides (dotted keys, TOML literal
/// values, bare words taken as strings) and validates the result.
pub fn parse(text: &str, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let mut doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| cfg_err(format!("invalid config: {}", e.message())))?;
    for item in overrides {
        apply_override(&mut doc, item)?;
    }
    let cfg: ExperimentConfig = toml::Value::Table(doc)
        .try_into()
        .map_err(|e: toml::de::Error| cfg_err(format!("invalid config: {}", e.message())))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| cfg_err(format!("cannot read config {}: {e}", p.display())))?,
        None => DEFAULT_PRESET.to_string(),
    };
    parse(&text, overrides)
}

fn apply_override(doc: &mut toml::Table, item: &str) -> Result<(), ConfigError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| cfg_err(format!("override `{item}` is not of the form key=value")))?;
    let key = key.trim();
    let value = parse_value(raw.trim());
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| cfg_err("empty override key"))?;
    let mut table = doc;
    for p in parts {
        table = table
            .get_mut(p)
            .and_then(|v| v.as_table_mut())
            .ok_or_else(|| cfg_err(format!("unknown config section `{p}` in `{key}`")))?;
    }
    if !table.contains_key(last) {
        return Err(cfg_err(format!("unknown config key `{key}`")));
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let probe = format!("v = {raw}");
    match probe.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.signal;
        if s.length < 2 || !(s.dt > 0.0) || s.rk4_substeps == 0 {
            return Err(cfg_err("signal.length must be >= 2, dt > 0, rk4_substeps >= 1"));
        }
        let noise_ok = |v: &f64| v.is_finite() && *v >= 0.0;
        if self.noise.sigma2.is_empty() || !self.noise.sigma2.iter().all(noise_ok) {
            return Err(cfg_err("noise.sigma2 must be a nonempty list of values >= 0"));
        }
        if self.noise.realizations == 0 {
            return Err(cfg_err("noise.realizations must be >= 1"));
        }
        if self.rnn.input_dim != 1 || self.rnn.output_dim != 1 {
            return Err(cfg_err("rnn.input_dim and rnn.output_dim must be 1"));
        }
        if self.rnn.training_signals != 1 {
            return Err(cfg_err("rnn.training_signals must be 1"));
        }
        if self.ga.variables != 1 {
            return Err(cfg_err("ga.variables must be 1 (only x0 is estimated)"));
        }
        if self.eval.span == 0 || self.eval.span > s.length {
            return Err(cfg_err(format!(
                "eval.span must lie in [1, {}]",
                s.length
            )));
        }
        if self.ga.fitness_span < 2 || self.ga.fitness_span > s.length {
            return Err(cfg_err(format!("ga.fitness_span must lie in [2, {}]", s.length)));
        }
        if self.fig10.trials == 0 || self.fig10.lengths.iter().any(|l| *l < 2 || *l > s.length) {
            return Err(cfg_err(format!(
                "fig10.trials must be >= 1 and fig10.lengths within [2, {}]",
                s.length
            )));
        }
        if !(self.fig10.bounds_width > 0.0) {
            return Err(cfg_err("fig10.bounds_width must be positive"));
        }
        if self.fig7.snapshot_every == 0 || self.fig7.iterations == 0 || self.fig7.map_seeds == 0 {
            return Err(cfg_err("fig7 iterations, snapshot_every and map_seeds must be >= 1"));
        }
        for kind in [MapKind::Lorenz, MapKind::Rossler, MapKind::Henon] {
            self.ga_config(kind, 0)
                .validate()
                .map_err(|e| cfg_err(format!("ga for {}: {e}", kind.name())))?;
        }
        self.generator(s.length, 0)
            .validate()
            .map_err(|e| cfg_err(format!("dip: {e}")))?;
        Ok(())
    }

    /// SHA-256 over the canonical serialization, first 16 hex digits.
    pub fn hash(&self) -> String {
        hash_hex(&toml::to_string(self).unwrap_or_default())
    }

    /// Hash of the sections that determine a trained RNN.
    pub fn rnn_hash(&self) -> String {
        let key = (&self.signal, &self.lorenz, &self.rnn, self.noise.seed);
        hash_hex(&format!("{key:?}"))
    }

    pub fn out_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.output.dir.clone(),
        }
    }

    pub fn rk4(&self) -> Rk4 {
        Rk4 {
            dt: self.signal.dt,
            substeps: self.signal.rk4_substeps,
        }
    }

    pub fn map(&self, kind: MapKind) -> ChaoticMap {
        match kind {
            MapKind::Lorenz => ChaoticMap::Lorenz(LorenzParams {
                rho: self.lorenz.rho,
                r: self.lorenz.r,
                beta: self.lorenz.beta,
            }),
            MapKind::Rossler => ChaoticMap::Rossler(
                RosslerParams {
                    omega: self.rossler.omega,
                },
                if self.rossler.standard {
                    RosslerVariant::Standard
                } else {
                    RosslerVariant::AsPrinted
                },
            ),
            MapKind::Henon => ChaoticMap::Henon(HenonParams {
                b: self.henon.b,
                beta_h: self.henon.beta,
            }),
        }
    }

    pub fn init(&self, kind: MapKind) -> State3 {
        let v = match kind {
            MapKind::Lorenz => self.lorenz.init,
            MapKind::Rossler => self.rossler.init,
            MapKind::Henon => self.henon.init,
        };
        State3::new(v[0], v[1], v[2])
    }

    pub fn ga_bounds(&self, kind: MapKind) -> (f64, f64) {
        match kind {
            MapKind::Lorenz => (self.ga.lower, self.ga.upper),
            MapKind::Rossler => (self.rossler.ga_bounds[0], self.rossler.ga_bounds[1]),
            MapKind::Henon => (self.henon.ga_bounds[0], self.henon.ga_bounds[1]),
        }
    }

    pub fn ga_config(&self, kind: MapKind, seed_offset: u64) -> GaConfig {
        let (lower, upper) = self.ga_bounds(kind);
        GaConfig {
            population_size: self.ga.population_size,
            n_generations: self.ga.generations,
            crossover_fraction: self.ga.crossover_fraction,
            mutation_fraction: self.ga.mutation_fraction,
            lower,
            upper,
            digits: self.ga.digits,
            tournament: self.ga.tournament,
            elitism: self.ga.elitism,
            seed: self.ga.seed.wrapping_add(seed_offset),
        }
    }

    /// Generator geometry for signals of `len` samples.
    pub fn generator(&self, len: usize, seed_offset: u64) -> GeneratorConfig {
        let d = &self.dip;
        let mut cfg = GeneratorConfig {
            latent_channels: d.latent_channels,
            latent_length: d.latent_length,
            filters: d.filters,
            n_layers: d.layers,
            kernel: d.kernel,
            stride: d.stride,
            padding: d.padding,
            output_length: len,
            crop: false,
            seed: d.seed.wrapping_add(seed_offset),
            ..GeneratorConfig::preset(0)
        };
        if cfg.native_length() != len {
            cfg.latent_length = 1;
            while cfg.native_length() < len && cfg.latent_length < len {
                cfg.latent_length += 1;
            }
            cfg.crop = cfg.native_length() != len;
        }
        cfg
    }

    pub fn schedule(&self) -> DipSchedule {
        DipSchedule {
            iters: self.dip.iterations,
            lr: self.dip.learning_rate,
            mom: self.dip.momentum,
            gd_iters: self.dip.gd_iterations,
            gd_lr: self.dip.gd_learning_rate,
        }
    }

    pub fn rnn_config(&self) -> RnnConfig {
        RnnConfig {
            hidden: self.rnn.hidden,
            depth: self.rnn.depth,
            decoder_sees_input: self.rnn.decoder_sees_input,
            seed: self.rnn.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            iters: self.rnn.iterations,
            lr: self.rnn.learning_rate,
        }
    }

    pub fn metric(&self) -> ErrorMetric {
        match self.eval.metric {
            MetricKind::Mae => ErrorMetric::Mae,
            MetricKind::Rmse => ErrorMetric::Rmse,
        }
    }

    /// Receiver settings for `kind` with the given known `y0, z0`.
    pub fn receiver(&self, kind: MapKind, yz0: (f64, f64)) -> ReceiverConfig {
        ReceiverConfig {
            map: self.map(kind),
            rk4: self.rk4(),
            known_y0: yz0.0,
            known_z0: yz0.1,
            coupling: match self.signal.coupling {
                CouplingKind::Reseed => DriveCoupling::Reseed,
                CouplingKind::Linear => DriveCoupling::Linear,
            },
            reconstruction: match self.signal.reconstruction {
                ReconstructionKind::EstimatedOrbit => Reconstruction::EstimatedOrbit,
                ReconstructionKind::DrivenResponse => Reconstruction::DrivenResponse,
            },
            fitness_span: self.ga.fitness_span,
        }
    }
}

fn hash_hex(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
