//! Genetic search for the unknown initial value `x0`.
//!
//! Genes are fixed-point decimals: a candidate is `lower + k · 10⁻ᵈ` with an
//! integer `k ∈ [0, K]`, written with as many decimal digits as `K` has.
//! One-point crossover swaps digit suffixes of that representation.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::channel::{tags, RngStream, Sampler};
use crate::dynamics::{ChaoticMap, Rk4, State3};
use crate::error::{Error, Result};
use crate::math;
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub n_generations: usize,
    /// Share of each new generation produced by crossover pairs.
    pub crossover_fraction: f64,
    /// Probability that an individual's gene is redrawn uniformly.
    pub mutation_fraction: f64,
    pub lower: f64,
    pub upper: f64,
    /// Fractional decimal digits of a gene.
    pub digits: u32,
    pub tournament: usize,
    pub elitism: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 10_000,
            n_generations: 10,
            crossover_fraction: 0.1,
            mutation_fraction: 0.1,
            lower: 0.0,
            upper: 0.1,
            digits: 6,
            tournament: 2,
            elitism: 1,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let frac = 0.0..=1.0;
        if !(self.lower < self.upper) || !self.lower.is_finite() || !self.upper.is_finite() {
            return Err(Error::Config(alloc::format!(
                "GA bounds must satisfy lower < upper, got [{}, {}]",
                self.lower,
                self.upper
            )));
        }
        if !frac.contains(&self.crossover_fraction) || !frac.contains(&self.mutation_fraction) {
            return Err(Error::Config("GA fractions must lie in [0, 1]".into()));
        }
        if self.population_size == 0 || self.n_generations == 0 || self.tournament == 0 {
            return Err(Error::Config(
                "GA population, generations and tournament size must be >= 1".into(),
            ));
        }
        if self.elitism > self.population_size || self.digits > 15 {
            return Err(Error::Config("GA elitism or digit count out of range".into()));
        }
        GeneCodec::new(self).map(|_| ())
    }
}

/// Fixed-point decimal gene representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneCodec {
    pub lower: f64,
    pub resolution: f64,
    /// Largest gene integer.
    pub max: u64,
    /// Decimal digits of `max`.
    pub width: u32,
}

impl GeneCodec {
    pub fn new(cfg: &GaConfig) -> Result<Self> {
        let resolution = libm::pow(10.0, -(cfg.digits as f64));
        let span = math::round((cfg.upper - cfg.lower) / resolution);
        if !(span >= 1.0) || span > 1e15 {
            return Err(Error::Config(alloc::format!(
                "GA bounds [{}, {}] give no representable genes at {} digits",
                cfg.lower,
                cfg.upper,
                cfg.digits
            )));
        }
        let max = span as u64;
        let width = max.checked_ilog10().unwrap_or(0) + 1;
        Ok(GeneCodec {
            lower: cfg.lower,
            resolution,
            max,
            width,
        })
    }

    pub fn encode(&self, x: f64) -> u64 {
        let k = math::round((x - self.lower) / self.resolution);
        if k <= 0.0 {
            0
        } else {
            (k as u64).min(self.max)
        }
    }

    pub fn decode(&self, k: u64) -> f64 {
        self.lower + k.min(self.max) as f64 * self.resolution
    }

    /// Swaps the digits after position `cut` (counted from the most
    /// significant of `width` digits) and clamps the results to `max`.
    pub fn crossover(&self, a: u64, b: u64, cut: u32) -> (u64, u64) {
        let cut = cut.min(self.width);
        let m = 10u64.pow(self.width - cut);
        let (ha, la) = (a / m, a % m);
        let (hb, lb) = (b / m, b % m);
        ((ha * m + lb).min(self.max), (hb * m + la).min(self.max))
    }
}

/// [`GeneCodec::crossover`] on real values.
pub fn digit_crossover(a: f64, b: f64, cut: u32, codec: &GeneCodec) -> (f64, f64) {
    let (x, y) = codec.crossover(codec.encode(a), codec.encode(b), cut);
    (codec.decode(x), codec.decode(y))
}

/// Everything the objective needs besides the candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessContext {
    /// Reference samples (the first `span` of the denoised drive).
    pub chi: Vec<f64>,
    pub known_y0: f64,
    pub known_z0: f64,
    pub map: ChaoticMap,
    pub rk4: Rk4,
}

impl FitnessContext {
    pub fn new(
        chi: &Signal,
        known_y0: f64,
        known_z0: f64,
        map: ChaoticMap,
        rk4: Rk4,
        span: usize,
    ) -> Result<Self> {
        if span < 2 || span > chi.len() {
            return Err(Error::domain(alloc::format!(
                "fitness span {span} must lie in [2, {}]",
                chi.len()
            )));
        }
        Ok(FitnessContext {
            chi: chi.values[..span].to_vec(),
            known_y0,
            known_z0,
            map,
            rk4,
        })
    }

    pub fn span(&self) -> usize {
        self.chi.len()
    }
}

/// Mean squared difference between the x orbit started at
/// `(x0, y0, z0)` and the reference; `+∞` when the orbit blows up.
pub fn fitness(x0: f64, ctx: &FitnessContext) -> f64 {
    let mut buf = vec![0.0; ctx.span()];
    fitness_into(x0, ctx, &mut buf)
}

fn fitness_into(x0: f64, ctx: &FitnessContext, buf: &mut [f64]) -> f64 {
    let s0 = State3::new(x0, ctx.known_y0, ctx.known_z0);
    if ctx.map.x_orbit_into(s0, &ctx.rk4, buf).is_err() {
        return f64::INFINITY;
    }
    let sum: f64 = buf
        .iter()
        .zip(&ctx.chi)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let f = sum / buf.len() as f64;
    if f.is_finite() {
        f
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaResult {
    pub x0_hat: f64,
    pub best_fitness: f64,
    /// Best fitness after each generation.
    pub history: Vec<f64>,
    /// Distinct candidates whose objective was computed.
    pub evaluations: usize,
}

struct Evaluator<'a> {
    ctx: &'a FitnessContext,
    codec: GeneCodec,
    cache: BTreeMap<u64, f64>,
    buf: Vec<f64>,
}

impl Evaluator<'_> {
    fn get(&mut self, k: u64) -> f64 {
        if let Some(f) = self.cache.get(&k) {
            return *f;
        }
        let f = fitness_into(self.codec.decode(k), self.ctx, &mut self.buf);
        self.cache.insert(k, f);
        f
    }
}

// Lower fitness wins; ties go to the smaller gene so ordering is total.
fn better(a: (f64, u64), b: (f64, u64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn tournament(rng: &mut Sampler, pop: &[u64], fit: &[f64], size: usize) -> u64 {
    let mut best = rng.below(pop.len());
    for _ in 1..size {
        let c = rng.below(pop.len());
        if better((fit[c], pop[c]), (fit[best], pop[best])) {
            best = c;
        }
    }
    pop[best]
}

pub fn ga_run(ctx: &FitnessContext, cfg: &GaConfig) -> Result<GaResult> {
    cfg.validate()?;
    let codec = GeneCodec::new(cfg)?;
    let mut rng = RngStream::tagged(cfg.seed, tags::GENETIC_SEARCH, 0).sampler();
    let mut eval = Evaluator {
        ctx,
        codec,
        cache: BTreeMap::new(),
        buf: vec![0.0; ctx.span()],
    };
    let n = cfg.population_size;
    let draw = |rng: &mut Sampler| rng.below(codec.max as usize + 1) as u64;

    let mut pop: Vec<u64> = (0..n).map(|_| draw(&mut rng)).collect();
    let mut fit: Vec<f64> = pop.iter().map(|k| eval.get(*k)).collect();
    let n_cross = {
        let c = math::round(cfg.crossover_fraction * n as f64) as usize;
        c.min(n - cfg.elitism)
    };
    let mut history = Vec::with_capacity(cfg.n_generations);
    let mut next = Vec::with_capacity(n);
    for _ in 0..cfg.n_generations {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            fit[a]
                .partial_cmp(&fit[b])
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(pop[a].cmp(&pop[b]))
        });
        next.clear();
        next.extend(order[..cfg.elitism].iter().map(|&i| pop[i]));
        while next.len() < cfg.elitism + n_cross {
            let a = tournament(&mut rng, &pop, &fit, cfg.tournament);
            let b = tournament(&mut rng, &pop, &fit, cfg.tournament);
            let cut = 1 + rng.below(codec.width.max(2) as usize - 1) as u32;
            let (c1, c2) = codec.crossover(a, b, cut);
            next.push(c1);
            if next.len() < cfg.elitism + n_cross {
                next.push(c2);
            }
        }
        while next.len() < n {
            next.push(tournament(&mut rng, &pop, &fit, cfg.tournament));
        }
        for gene in next[cfg.elitism..].iter_mut() {
            if rng.bernoulli(cfg.mutation_fraction) {
                *gene = draw(&mut rng);
            }
        }
        core::mem::swap(&mut pop, &mut next);
        for (f, k) in fit.iter_mut().zip(&pop) {
            *f = eval.get(*k);
        }
        let best = best_index(&pop, &fit);
        history.push(fit[best]);
    }
    let best = best_index(&pop, &fit);
    Ok(GaResult {
        x0_hat: codec.decode(pop[best]),
        best_fitness: fit[best],
        history,
        evaluations: eval.cache.len(),
    })
}

fn best_index(pop: &[u64], fit: &[f64]) -> usize {
    (1..pop.len()).fold(0, |b, i| {
        if better((fit[i], pop[i]), (fit[b], pop[b])) {
            i
        } else {
            b
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::LorenzParams;

    fn codec() -> GeneCodec {
        GeneCodec::new(&GaConfig::default()).unwrap()
    }

    #[test]
    fn codec_geometry() {
        let c = codec();
        assert_eq!((c.max, c.width), (100_000, 6));
        assert_eq!(c.encode(0.012345), 12_345);
        assert_eq!(c.encode(-1.0), 0);
        assert_eq!(c.encode(7.0), 100_000);
    }

    #[test]
    fn crossover_examples() {
        let c = codec();
        let (x, y) = digit_crossover(0.012345, 0.098765, 3, &c);
        assert!((x - 0.012765).abs() < 1e-12 && (y - 0.098345).abs() < 1e-12);
        let (x, y) = digit_crossover(0.012345, 0.098765, 0, &c);
        assert!((x - 0.098765).abs() < 1e-12 && (y - 0.012345).abs() < 1e-12);
        // A suffix swap past the upper bound is clamped.
        let (x, y) = c.crossover(100_000, 99_999, 1);
        assert!(x <= c.max && y <= c.max);
    }

    fn lorenz_ctx(span: usize) -> FitnessContext {
        let map = ChaoticMap::Lorenz(LorenzParams::CHAOTIC);
        let rk4 = Rk4::new(0.1);
        let t = map.trajectory(State3::new(0.1, 0.1, 0.1), span, &rk4).unwrap();
        FitnessContext::new(&t.x(), 0.1, 0.1, map, rk4, span).unwrap()
    }

    #[test]
    fn fitness_examples() {
        let ctx = lorenz_ctx(250);
        let f0 = fitness(0.1, &ctx);
        assert!(f0 <= 1e-20);
        assert_eq!(f0.to_bits(), fitness(0.1, &ctx).to_bits());
        let f1 = fitness(0.1 + 1e-3, &ctx);
        assert!(f1 > 10.0 * f0 && f1 > 0.0);
    }

    #[test]
    fn overflowing_candidate_is_infinite() {
        let map = ChaoticMap::Henon(Default::default());
        let chi = Signal::new(vec![0.0; 50], 1.0);
        let ctx = FitnessContext::new(&chi, 0.1, 0.1, map, Rk4::new(1.0), 50).unwrap();
        assert_eq!(fitness(0.1, &ctx), f64::INFINITY);
    }

    #[test]
    fn small_run_history_contract() {
        let ctx = lorenz_ctx(100);
        let cfg = GaConfig {
            population_size: 200,
            n_generations: 7,
            ..GaConfig::default()
        };
        let r = ga_run(&ctx, &cfg).unwrap();
        assert_eq!(r.history.len(), 7);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r, ga_run(&ctx, &cfg).unwrap());
        assert!((0.0..=0.1).contains(&r.x0_hat));
    }

    #[test]
    fn invalid_configs() {
        let ctx = lorenz_ctx(10);
        for cfg in [
            GaConfig { lower: 0.1, upper: 0.1, ..GaConfig::default() },
            GaConfig { crossover_fraction: 1.5, ..GaConfig::default() },
            GaConfig { population_size: 0, ..GaConfig::default() },
        ] {
            assert!(matches!(ga_run(&ctx, &cfg), Err(Error::Config(_))));
        }
        let chi = Signal::new(vec![0.0; 5], 0.1);
        assert!(FitnessContext::new(&chi, 0.0, 0.0, ctx.map, ctx.rk4, 6).is_err());
    }
}
