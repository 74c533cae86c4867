//! Fast correctness checks: gradients, integrator, channel statistics and
//! noise-free initial-value recovery.

use std::time::Instant;

use dcs_core::channel::{awgn, ChannelConfig};
use dcs_core::ga::{ga_run, FitnessContext};
use dcs_core::Signal;

use crate::config::{ExperimentConfig, MapKind};
use crate::oracle::{check_gradient, lorenz_reference, Mutation, PRIMITIVES};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Check {
    pub fn line(&self) -> String {
        format!(
            "{} {} ({}; {:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

fn timed(name: String, f: impl FnOnce() -> (bool, String)) -> Check {
    let start = Instant::now();
    let (passed, detail) = f();
    Check {
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// One check per autodiff primitive and composite network.
pub fn gradient_checks(instances: usize, seed: u64, mutation: Mutation) -> Vec<Check> {
    PRIMITIVES
        .iter()
        .map(|p| {
            timed(format!("gradient/{p}"), || {
                let r = check_gradient(p, instances, seed, mutation);
                (
                    r.passed(),
                    format!(
                        "{} instances, {} kinked draws skipped, worst relative error {:.2e}",
                        r.instances, r.rejected, r.worst_rel_error
                    ),
                )
            })
        })
        .collect()
}

/// Configured RK4 Lorenz run against the adaptive reference over 100 steps.
pub fn integrator_check(cfg: &ExperimentConfig) -> Check {
    timed("integrator/lorenz-rk4-vs-dopri5".into(), || {
        let steps = 100;
        let init = cfg.init(MapKind::Lorenz);
        let traj = match cfg.map(MapKind::Lorenz).trajectory(init, steps + 1, &cfg.rk4()) {
            Ok(t) => t,
            Err(e) => return (false, e.to_string()),
        };
        let reference = lorenz_reference(
            cfg.lorenz.rho,
            cfg.lorenz.r,
            cfg.lorenz.beta,
            [init.x, init.y, init.z],
            cfg.signal.dt,
            steps + 1,
        );
        let worst = traj
            .states
            .iter()
            .zip(&reference)
            .map(|(s, r)| (s.x - r[0]).abs().max((s.y - r[1]).abs()).max((s.z - r[2]).abs()))
            .fold(0.0, f64::max);
        (worst < 1e-3, format!("max abs deviation {worst:.2e}, bound 1e-3"))
    })
}

/// Mean, variance and lag-1 autocorrelation of 10^6 channel samples at
/// noise power 0.5.
pub fn channel_check(seed: u64) -> Check {
    timed("channel/awgn-statistics".into(), || {
        let n = 1_000_000;
        let sigma2 = 0.5;
        let zero = Signal::new(vec![0.0; n], 1.0);
        let noise = match awgn(&zero, &ChannelConfig::new(sigma2, seed)) {
            Ok(s) => s.values,
            Err(e) => return (false, e.to_string()),
        };
        let mean = noise.iter().sum::<f64>() / n as f64;
        let var = noise.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let lag1 = noise
            .windows(2)
            .map(|w| (w[0] - mean) * (w[1] - mean))
            .sum::<f64>()
            / ((n - 1) as f64 * var);
        let ok = mean.abs() <= 0.01 && (var / sigma2 - 1.0).abs() <= 0.05 && lag1.abs() < 0.01;
        (ok, format!("mean {mean:.2e}, variance {var:.4}, lag-1 {lag1:.2e}"))
    })
}

/// Genetic search on the clean Lorenz drive in `runs` seeded runs; passes
/// when at least 90% land within 1e-3 of the true `x0`.
pub fn ga_recovery_check(cfg: &ExperimentConfig, runs: u32) -> Check {
    timed("ga/noise-free-recovery".into(), || {
        let kind = MapKind::Lorenz;
        let init = cfg.init(kind);
        let x = match cfg.map(kind).trajectory(init, cfg.signal.length, &cfg.rk4()) {
            Ok(t) => t.x(),
            Err(e) => return (false, e.to_string()),
        };
        let span = cfg.ga.fitness_span.min(x.len());
        let ctx = match FitnessContext::new(&x, init.y, init.z, cfg.map(kind), cfg.rk4(), span) {
            Ok(c) => c,
            Err(e) => return (false, e.to_string()),
        };
        let mut hits = 0;
        let mut worst: f64 = 0.0;
        for run in 0..runs {
            match ga_run(&ctx, &cfg.ga_config(kind, run as u64)) {
                Ok(r) => {
                    let err = (r.x0_hat - init.x).abs();
                    worst = worst.max(err);
                    if err <= 1e-3 {
                        hits += 1;
                    }
                }
                Err(e) => return (false, e.to_string()),
            }
        }
        let need = (runs * 9).div_ceil(10);
        (
            hits >= need,
            format!("{hits}/{runs} runs within 1e-3 (need {need}), worst error {worst:.2e}"),
        )
    })
}

pub fn run_all(cfg: &ExperimentConfig, mutation: Mutation) -> Vec<Check> {
    let mut checks = gradient_checks(50, 1, mutation);
    checks.push(integrator_check(cfg));
    checks.push(channel_check(cfg.noise.seed));
    checks.push(ga_recovery_check(cfg, 10));
    checks
}
