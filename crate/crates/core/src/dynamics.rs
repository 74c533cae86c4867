//! Chaotic drive systems and the driven response subsystem.
//!
//! Continuous systems are integrated with classical fixed-step RK4. A sample
//! step `dt` is split into `substeps` equal RK4 steps; the sampled trajectory
//! only records the state at whole multiples of `dt`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl State3 {
    pub const ZERO: State3 = State3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        State3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline(always)]
    fn axpy(self, h: f64, k: State3) -> State3 {
        State3 {
            x: self.x + h * k.x,
            y: self.y + h * k.y,
            z: self.z + h * k.z,
        }
    }

    pub fn max_abs_diff(&self, other: &State3) -> f64 {
        let dx = (self.x - other.x).abs();
        let dy = (self.y - other.y).abs();
        let dz = (self.z - other.z).abs();
        dx.max(dy).max(dz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzParams {
    pub rho: f64,
    pub r: f64,
    pub beta: f64,
}

impl LorenzParams {
    pub const CHAOTIC: LorenzParams = LorenzParams {
        rho: 10.0,
        r: 28.0,
        beta: 8.0 / 3.0,
    };

    fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.r.is_finite() && self.beta.is_finite()
    }
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self::CHAOTIC
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RosslerParams {
    pub omega: f64,
}

impl Default for RosslerParams {
    fn default() -> Self {
        RosslerParams { omega: 0.95 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HenonParams {
    pub b: f64,
    /// The quadratic coupling of the `z` update; unrelated to the Lorenz `beta`.
    pub beta_h: f64,
}

impl Default for HenonParams {
    fn default() -> Self {
        HenonParams {
            b: 0.25,
            beta_h: 0.279,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory3 {
    pub states: Vec<State3>,
    pub dt: f64,
    pub t0: f64,
}

impl Trajectory3 {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    fn component(&self, pick: impl Fn(&State3) -> f64) -> Signal {
        Signal::new(self.states.iter().map(pick).collect(), self.dt).with_t0(self.t0)
    }

    pub fn x(&self) -> Signal {
        self.component(|s| s.x)
    }

    pub fn y(&self) -> Signal {
        self.component(|s| s.y)
    }

    pub fn z(&self) -> Signal {
        self.component(|s| s.z)
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn slice(&self, start: usize, len: usize) -> Result<Trajectory3> {
        if start + len > self.len() || len == 0 {
            return Err(Error::Shape {
                op: "trajectory slice",
                left: (3, self.len()),
                right: (3, start + len),
            });
        }
        Ok(Trajectory3 {
            states: self.states[start..start + len].to_vec(),
            dt: self.dt,
            t0: self.t0 + start as f64 * self.dt,
        })
    }
}

#[inline(always)]
fn lorenz_field(s: State3, p: &LorenzParams) -> State3 {
    let (dy, dz) = response_field(s.y, s.z, s.x, p);
    State3 {
        x: p.rho * (s.y - s.x),
        y: dy,
        z: dz,
    }
}

// Shares its arithmetic with the y/z rows of `lorenz_field`, so a response
// driven by the exact master x reproduces the master bit for bit.
#[inline(always)]
fn response_field(y: f64, z: f64, mu: f64, p: &LorenzParams) -> (f64, f64) {
    (p.r * mu - y - mu * z, mu * y - p.beta * z)
}

#[inline(always)]
fn rossler_field(s: State3, p: &RosslerParams, standard: bool) -> State3 {
    let wy = p.omega * s.y;
    State3 {
        x: if standard { -wy - s.z } else { wy - s.z },
        y: p.omega * s.x + 0.15 * s.y,
        z: 0.4 + s.z * (s.x - 8.5),
    }
}

#[inline(always)]
fn henon_map(s: State3, p: &HenonParams) -> State3 {
    let x2 = s.x * s.x;
    State3 {
        x: 1.0 + s.y - s.z * x2,
        y: p.b * s.x,
        z: s.z - 0.5 + p.beta_h * x2,
    }
}

fn check_finite_state(s: &State3, what: &str) -> Result<()> {
    if s.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(alloc::format!("non-finite {what}")))
    }
}

/// Right-hand side of the Lorenz drive system.
pub fn lorenz_derivative(s: State3, p: &LorenzParams) -> Result<State3> {
    check_finite_state(&s, "Lorenz state")?;
    if !p.is_finite() {
        return Err(Error::domain("non-finite Lorenz parameters"));
    }
    Ok(lorenz_field(s, p))
}

/// Right-hand side of the `(y_r, z_r)` response subsystem driven by `mu`.
pub fn response_derivative(yz: (f64, f64), mu: f64, p: &LorenzParams) -> Result<(f64, f64)> {
    if !(yz.0.is_finite() && yz.1.is_finite() && mu.is_finite()) {
        return Err(Error::domain("non-finite response input"));
    }
    if !p.is_finite() {
        return Err(Error::domain("non-finite Lorenz parameters"));
    }
    Ok(response_field(yz.0, yz.1, mu, p))
}

/// Rössler right-hand side exactly as configured: `x' = ωy − z` by default.
pub fn rossler_derivative(s: State3, p: &RosslerParams) -> Result<State3> {
    check_finite_state(&s, "Rössler state")?;
    if !p.omega.is_finite() {
        return Err(Error::domain("non-finite Rössler omega"));
    }
    Ok(rossler_field(s, p, false))
}

/// One iteration of the three-dimensional Henon map.
pub fn henon_step(s: State3, p: &HenonParams) -> Result<State3> {
    check_finite_state(&s, "Henon state")?;
    if !(p.b.is_finite() && p.beta_h.is_finite()) {
        return Err(Error::domain("non-finite Henon parameters"));
    }
    Ok(henon_map(s, p))
}

#[inline(always)]
fn rk4_step(f: &impl Fn(State3) -> State3, s: State3, h: f64) -> State3 {
    let half = 0.5 * h;
    let k1 = f(s);
    let k2 = f(s.axpy(half, k1));
    let k3 = f(s.axpy(half, k2));
    let k4 = f(s.axpy(h, k3));
    let sixth = h / 6.0;
    State3 {
        x: s.x + sixth * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
        y: s.y + sixth * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
        z: s.z + sixth * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z),
    }
}

/// Fixed-step RK4 sampled every `dt`, with `substeps` inner steps per sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rk4 {
    pub dt: f64,
    pub substeps: usize,
}

impl Rk4 {
    /// Inner steps per sample used throughout the pipeline. Twenty steps of
    /// 0.005 keep the Lorenz orbit within 1e-4 of the exact solution for the
    /// first hundred samples; a single step of 0.1 is off by O(1).
    pub const DEFAULT_SUBSTEPS: usize = 20;

    pub fn new(dt: f64) -> Self {
        Rk4 {
            dt,
            substeps: Self::DEFAULT_SUBSTEPS,
        }
    }

    pub fn classical(dt: f64) -> Self {
        Rk4 { dt, substeps: 1 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::domain("dt must be positive and finite"));
        }
        if self.substeps == 0 {
            return Err(Error::domain("substeps must be at least 1"));
        }
        Ok(())
    }

    #[inline(always)]
    fn advance(&self, f: &impl Fn(State3) -> State3, mut s: State3) -> State3 {
        let h = self.dt / self.substeps as f64;
        for _ in 0..self.substeps {
            s = rk4_step(f, s, h);
        }
        s
    }

    /// `n` samples starting with `s0` itself.
    pub fn integrate(
        &self,
        deriv: impl Fn(State3) -> State3,
        s0: State3,
        n: usize,
    ) -> Result<Trajectory3> {
        self.validate()?;
        if n == 0 {
            return Err(Error::domain("step count must be at least 1"));
        }
        check_finite_state(&s0, "initial state")?;
        let mut states = Vec::with_capacity(n);
        states.push(s0);
        let mut s = s0;
        for step in 1..n {
            s = self.advance(&deriv, s);
            if !s.is_finite() {
                return Err(Error::Overflow { step });
            }
            states.push(s);
        }
        Ok(Trajectory3 {
            states,
            dt: self.dt,
            t0: 0.0,
        })
    }
}

/// Classical single-step RK4: `n` samples, `s0` first.
pub fn integrate_rk4(
    deriv: impl Fn(State3) -> State3,
    s0: State3,
    dt: f64,
    n: usize,
) -> Result<Trajectory3> {
    Rk4::classical(dt).integrate(deriv, s0, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RosslerVariant {
    /// `x' = ωy − z`.
    #[default]
    AsPrinted,
    /// `x' = −ωy − z`, the textbook form.
    Standard,
}

/// A drive system that can produce the transmitted signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChaoticMap {
    Lorenz(LorenzParams),
    Rossler(RosslerParams, RosslerVariant),
    Henon(HenonParams),
}

impl ChaoticMap {
    pub fn name(&self) -> &'static str {
        match self {
            ChaoticMap::Lorenz(_) => "lorenz",
            ChaoticMap::Rossler(..) => "rossler",
            ChaoticMap::Henon(_) => "henon",
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, ChaoticMap::Henon(_))
    }

    /// Sample step of the generated signal: `rk4.dt`, or 1 for the Henon map.
    pub fn sample_step(&self, rk4: &Rk4) -> f64 {
        if self.is_discrete() {
            1.0
        } else {
            rk4.dt
        }
    }

    /// `n` samples of the full state, `s0` first.
    pub fn trajectory(&self, s0: State3, n: usize, rk4: &Rk4) -> Result<Trajectory3> {
        match *self {
            ChaoticMap::Lorenz(p) => rk4.integrate(move |s| lorenz_field(s, &p), s0, n),
            ChaoticMap::Rossler(p, v) => rk4.integrate(
                move |s| rossler_field(s, &p, v == RosslerVariant::Standard),
                s0,
                n,
            ),
            ChaoticMap::Henon(p) => {
                if n == 0 {
                    return Err(Error::domain("step count must be at least 1"));
                }
                check_finite_state(&s0, "initial state")?;
                let mut states = Vec::with_capacity(n);
                let mut s = s0;
                states.push(s);
                for step in 1..n {
                    s = henon_map(s, &p);
                    if !s.is_finite() {
                        return Err(Error::Overflow { step });
                    }
                    states.push(s);
                }
                Ok(Trajectory3 {
                    states,
                    dt: 1.0,
                    t0: 0.0,
                })
            }
        }
    }

    /// Fills `out` with the x component of the orbit from `s0`, without
    /// allocating. Returns the overflow step on divergence.
    pub fn x_orbit_into(&self, s0: State3, rk4: &Rk4, out: &mut [f64]) -> Result<()> {
        fn run(
            out: &mut [f64],
            mut s: State3,
            mut next: impl FnMut(State3) -> State3,
        ) -> Result<()> {
            for (step, slot) in out.iter_mut().enumerate() {
                if step > 0 {
                    s = next(s);
                    if !s.is_finite() {
                        return Err(Error::Overflow { step });
                    }
                }
                *slot = s.x;
            }
            Ok(())
        }
        match *self {
            ChaoticMap::Lorenz(p) => run(out, s0, |s| rk4.advance(&|s| lorenz_field(s, &p), s)),
            ChaoticMap::Rossler(p, v) => {
                let standard = v == RosslerVariant::Standard;
                run(out, s0, |s| {
                    rk4.advance(&|s| rossler_field(s, &p, standard), s)
                })
            }
            ChaoticMap::Henon(p) => run(out, s0, |s| henon_map(s, &p)),
        }
    }
}

/// How the sampled drive enters the continuous response equations between
/// samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriveCoupling {
    /// At each sample the drive value replaces the receiver's x, which then
    /// evolves by the master x-equation until the next sample. Exact when the
    /// drive is the noise-free master x.
    #[default]
    Reseed,
    /// Piecewise-linear interpolation of the sampled drive at RK4 stage times.
    Linear,
}

/// Integrates the `(y_r, z_r)` response subsystem driven by `drive`.
/// Both outputs have the drive's length and sampling grid.
pub fn integrate_response(
    drive: &Signal,
    yz0: (f64, f64),
    p: &LorenzParams,
    substeps: usize,
    coupling: DriveCoupling,
) -> Result<(Signal, Signal)> {
    drive.ensure_nonempty("drive")?;
    let rk4 = Rk4 {
        dt: drive.dt,
        substeps,
    };
    rk4.validate()?;
    if !(yz0.0.is_finite() && yz0.1.is_finite()) {
        return Err(Error::domain("non-finite response initial state"));
    }
    if let Some(i) = drive.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain(alloc::format!("non-finite drive sample {i}")));
    }
    let n = drive.len();
    let mut ys = Vec::with_capacity(n);
    let mut zs = Vec::with_capacity(n);
    let (mut y, mut z) = yz0;
    ys.push(y);
    zs.push(z);
    let h = drive.dt / substeps as f64;
    for step in 1..n {
        match coupling {
            DriveCoupling::Reseed => {
                let s = rk4.advance(&|s| lorenz_field(s, p), State3::new(drive.values[step - 1], y, z));
                y = s.y;
                z = s.z;
            }
            DriveCoupling::Linear => {
                let a = drive.values[step - 1];
                let b = drive.values[step];
                let at = |theta: f64| a + theta * (b - a);
                let m = substeps as f64;
                for j in 0..substeps {
                    let j = j as f64;
                    let (d0, dh, d1) = (at(j / m), at((j + 0.5) / m), at((j + 1.0) / m));
                    let f = |y: f64, z: f64, mu: f64| response_field(y, z, mu, p);
                    let k1 = f(y, z, d0);
                    let k2 = f(y + 0.5 * h * k1.0, z + 0.5 * h * k1.1, dh);
                    let k3 = f(y + 0.5 * h * k2.0, z + 0.5 * h * k2.1, dh);
                    let k4 = f(y + h * k3.0, z + h * k3.1, d1);
                    let sixth = h / 6.0;
                    y += sixth * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
                    z += sixth * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
                }
            }
        }
        if !(y.is_finite() && z.is_finite()) {
            return Err(Error::Overflow { step });
        }
        ys.push(y);
        zs.push(z);
    }
    Ok((drive.like(ys), drive.like(zs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const P: LorenzParams = LorenzParams::CHAOTIC;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn lorenz_derivative_examples() {
        assert_eq!(lorenz_derivative(State3::ZERO, &P).unwrap(), State3::ZERO);
        let d = lorenz_derivative(State3::new(0.1, 0.1, 0.1), &P).unwrap();
        assert!(close(d.x, 0.0, 1e-15));
        assert!(close(d.y, 2.69, 1e-12));
        assert!(close(d.z, -0.2566667, 1e-7));
        let d = lorenz_derivative(State3::new(1.0, 1.0, 1.0), &P).unwrap();
        assert_eq!((d.x, d.y), (0.0, 26.0));
        assert!(close(d.z, -5.0 / 3.0, 1e-15));
    }

    #[test]
    fn non_finite_inputs_are_domain_errors() {
        let bad = State3::new(f64::NAN, 0.0, 0.0);
        assert!(matches!(lorenz_derivative(bad, &P), Err(Error::Domain(_))));
        assert!(matches!(
            response_derivative((0.0, f64::INFINITY), 0.0, &P),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            rossler_derivative(bad, &RosslerParams::default()),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            henon_step(bad, &HenonParams::default()),
            Err(Error::Domain(_))
        ));
        let p = LorenzParams {
            rho: f64::NAN,
            ..P
        };
        assert!(lorenz_derivative(State3::ZERO, &p).is_err());
    }

    #[test]
    fn response_derivative_examples() {
        assert_eq!(response_derivative((0.0, 0.0), 0.0, &P).unwrap(), (0.0, 0.0));
        let (dy, dz) = response_derivative((0.1, 0.1), 0.1, &P).unwrap();
        assert!(close(dy, 2.69, 1e-12) && close(dz, -0.2566667, 1e-7));
        assert_eq!(response_derivative((1.0, 0.0), 1.0, &P).unwrap(), (27.0, 1.0));
    }

    #[test]
    fn rossler_examples() {
        let p = RosslerParams::default();
        let d = rossler_derivative(State3::ZERO, &p).unwrap();
        assert_eq!(d, State3::new(0.0, 0.0, 0.4));
        let d = rossler_derivative(State3::new(8.5, 0.0, 0.0), &p).unwrap();
        assert!(close(d.x, 0.0, 1e-15) && close(d.y, 8.075, 1e-12) && close(d.z, 0.4, 1e-15));
        let d = rossler_derivative(State3::new(0.0, 1.0, 0.95), &p).unwrap();
        assert!(close(d.x, 0.0, 1e-15) && close(d.y, 0.15, 1e-15) && close(d.z, -7.675, 1e-12));
    }

    #[test]
    fn henon_examples() {
        let p = HenonParams::default();
        assert_eq!(henon_step(State3::ZERO, &p).unwrap(), State3::new(1.0, 0.0, -0.5));
        assert_eq!(
            henon_step(State3::new(0.0, -1.0, 0.0), &p).unwrap(),
            State3::new(0.0, 0.0, -0.5)
        );
        let s = henon_step(State3::new(1.0, 0.0, 0.5), &p).unwrap();
        assert!(close(s.x, 0.5, 1e-15) && close(s.y, 0.25, 1e-15) && close(s.z, 0.279, 1e-12));
    }

    #[test]
    fn rk4_zero_field_is_constant() {
        let s0 = State3::new(1.0, 2.0, 3.0);
        let t = integrate_rk4(|_| State3::ZERO, s0, 0.37, 5).unwrap();
        assert_eq!(t.len(), 5);
        assert!(t.states.iter().all(|s| *s == s0));
    }

    #[test]
    fn rk4_single_step_of_exponential() {
        let t = integrate_rk4(|s| State3::new(s.x, 0.0, 0.0), State3::new(1.0, 0.0, 0.0), 0.1, 2)
            .unwrap();
        // 1 + h + h²/2 + h³/6 + h⁴/24 at h = 0.1
        assert!(close(t.states[1].x, 1.1051708333333333, 1e-15));
    }

    #[test]
    fn rk4_rejects_bad_arguments_and_reports_overflow_step() {
        assert!(integrate_rk4(|s| s, State3::ZERO, 0.0, 3).is_err());
        assert!(integrate_rk4(|s| s, State3::ZERO, 0.1, 0).is_err());
        let blowup = |s: State3| State3::new(s.x * s.x * 1e100, 0.0, 0.0);
        match integrate_rk4(blowup, State3::new(1.0, 0.0, 0.0), 1.0, 10) {
            Err(Error::Overflow { step }) => assert!(step >= 1),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn integration_is_bit_deterministic() {
        let map = ChaoticMap::Lorenz(P);
        let rk4 = Rk4::new(0.1);
        let a = map.trajectory(State3::new(0.1, 0.1, 0.1), 1024, &rk4).unwrap();
        let b = map.trajectory(State3::new(0.1, 0.1, 0.1), 1024, &rk4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lorenz_is_sensitive_to_initial_conditions() {
        let map = ChaoticMap::Lorenz(P);
        let rk4 = Rk4::new(0.1);
        let a = map.trajectory(State3::new(0.1, 0.1, 0.1), 1024, &rk4).unwrap();
        let b = map.trajectory(State3::new(0.1 + 1e-8, 0.1, 0.1), 1024, &rk4).unwrap();
        let sep = a
            .states
            .iter()
            .zip(&b.states)
            .map(|(p, q)| p.max_abs_diff(q))
            .fold(0.0, f64::max);
        assert!(sep > 1.0, "separation {sep}");
    }

    #[test]
    fn x_orbit_matches_trajectory() {
        let rk4 = Rk4::new(0.1);
        for map in [
            ChaoticMap::Lorenz(P),
            ChaoticMap::Rossler(RosslerParams::default(), RosslerVariant::Standard),
            ChaoticMap::Henon(HenonParams::default()),
        ] {
            let s0 = if map.is_discrete() {
                State3::new(-1.5, 0.0, -0.5)
            } else {
                State3::new(0.1, 0.1, 0.1)
            };
            let t = map.trajectory(s0, 300, &rk4).unwrap();
            let mut out = vec![0.0; 300];
            map.x_orbit_into(s0, &rk4, &mut out).unwrap();
            assert_eq!(out, t.x().values, "{}", map.name());
        }
    }

    #[test]
    fn henon_orbit_stays_bounded_from_preset_start() {
        let map = ChaoticMap::Henon(HenonParams::default());
        let t = map
            .trajectory(State3::new(-1.5, 0.0, -0.5), 1024, &Rk4::new(0.1))
            .unwrap();
        assert!(t.states.iter().all(|s| s.x.abs() < 10.0));
    }

    #[test]
    fn printed_rossler_and_henon_diverge_from_lorenz_start() {
        let rk4 = Rk4::new(0.1);
        let s0 = State3::new(0.1, 0.1, 0.1);
        let ross = ChaoticMap::Rossler(RosslerParams::default(), RosslerVariant::AsPrinted);
        assert!(matches!(ross.trajectory(s0, 1024, &rk4), Err(Error::Overflow { .. })));
        let std_ross = ChaoticMap::Rossler(RosslerParams::default(), RosslerVariant::Standard);
        let t = std_ross.trajectory(s0, 1024, &rk4).unwrap();
        assert!(t.states.iter().all(|s| s.x.abs() < 30.0));
        let henon = ChaoticMap::Henon(HenonParams::default());
        assert!(matches!(henon.trajectory(s0, 1024, &rk4), Err(Error::Overflow { .. })));
    }

    #[test]
    fn response_driven_by_master_reproduces_it_exactly() {
        let rk4 = Rk4::new(0.1);
        let t = ChaoticMap::Lorenz(P)
            .trajectory(State3::new(0.1, 0.1, 0.1), 1024, &rk4)
            .unwrap();
        let (yr, zr) =
            integrate_response(&t.x(), (0.1, 0.1), &P, rk4.substeps, DriveCoupling::Reseed).unwrap();
        assert_eq!(yr.len(), 1024);
        let z = t.z();
        let y = t.y();
        let err = z
            .values
            .iter()
            .zip(&zr.values)
            .chain(y.values.iter().zip(&yr.values))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "max error {err}");
    }

    #[test]
    fn zero_drive_response() {
        let drive = Signal::new(vec![0.0; 64], 0.1);
        for coupling in [DriveCoupling::Reseed, DriveCoupling::Linear] {
            let (yr, zr) = integrate_response(&drive, (0.0, 0.0), &P, 20, coupling).unwrap();
            assert!(yr.values.iter().chain(&zr.values).all(|v| *v == 0.0));
            let (_, zr) = integrate_response(&drive, (0.0, 1.0), &P, 20, coupling).unwrap();
            // t = 1 is sample 10
            let exact = libm::exp(-P.beta * 1.0);
            assert!((zr.values[10] - exact).abs() < 1e-6);
        }
    }

    #[test]
    fn response_rejects_empty_or_non_finite_drive() {
        let empty = Signal::new(vec![], 0.1);
        assert!(integrate_response(&empty, (0.0, 0.0), &P, 20, DriveCoupling::Reseed).is_err());
        let bad = Signal::new(vec![0.0, f64::NAN], 0.1);
        assert!(integrate_response(&bad, (0.0, 0.0), &P, 20, DriveCoupling::Reseed).is_err());
    }
}
