use alloc::vec::Vec;

use super::tensor::Tensor1D;
use crate::error::{Error, Result};
use crate::math;

fn check(params: &[Tensor1D], grads: &[Tensor1D]) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::Shape {
            op: "optimizer step",
            left: (params.len(), 0),
            right: (grads.len(), 0),
        });
    }
    for (p, g) in params.iter().zip(grads) {
        if p.shape() != g.shape() {
            return Err(Error::Shape {
                op: "optimizer step",
                left: p.shape(),
                right: g.shape(),
            });
        }
    }
    Ok(())
}

fn check_lr(lr: f64) -> Result<()> {
    if lr > 0.0 && lr.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(alloc::format!(
            "learning rate must be positive, got {lr}"
        )))
    }
}

/// `p ← p − lr·g`.
pub fn gd_step(params: &mut [Tensor1D], grads: &[Tensor1D], lr: f64) -> Result<()> {
    check_lr(lr)?;
    check(params, grads)?;
    for (p, g) in params.iter_mut().zip(grads) {
        for (w, d) in p.values.iter_mut().zip(&g.values) {
            *w -= lr * d;
        }
    }
    Ok(())
}

/// RMSProp with a single decay knob:
///
/// ```text
/// acc ← decay·acc + (1 − decay)·g²
/// p   ← p − lr·g / √(acc + eps)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct RmsProp {
    pub lr: f64,
    pub decay: f64,
    pub eps: f64,
    pub steps: u64,
    acc: Vec<Tensor1D>,
}

impl RmsProp {
    pub fn new(lr: f64, decay: f64) -> Result<Self> {
        check_lr(lr)?;
        if !(0.0..1.0).contains(&decay) {
            return Err(Error::Config(alloc::format!(
                "RMSProp decay must lie in [0, 1), got {decay}"
            )));
        }
        Ok(RmsProp {
            lr,
            decay,
            eps: 1e-8,
            steps: 0,
            acc: Vec::new(),
        })
    }

    pub fn accumulators(&self) -> &[Tensor1D] {
        &self.acc
    }

    pub fn step(&mut self, params: &mut [Tensor1D], grads: &[Tensor1D]) -> Result<()> {
        check(params, grads)?;
        if self.acc.is_empty() {
            self.acc = params.iter().map(|p| Tensor1D::zeros(p.channels, p.length)).collect();
        }
        check(&self.acc, grads)?;
        let (lr, decay, eps) = (self.lr, self.decay, self.eps);
        for ((p, g), a) in params.iter_mut().zip(grads).zip(self.acc.iter_mut()) {
            for ((w, d), s) in p.values.iter_mut().zip(&g.values).zip(a.values.iter_mut()) {
                *s = decay * *s + (1.0 - decay) * d * d;
                *w -= lr * d / math::sqrt(*s + eps);
            }
        }
        self.steps += 1;
        Ok(())
    }
}

/// Bias-corrected ADAM.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub steps: u64,
    m: Vec<Tensor1D>,
    v: Vec<Tensor1D>,
}

impl Adam {
    pub fn new(lr: f64) -> Result<Self> {
        check_lr(lr)?;
        Ok(Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            steps: 0,
            m: Vec::new(),
            v: Vec::new(),
        })
    }

    pub fn step(&mut self, params: &mut [Tensor1D], grads: &[Tensor1D]) -> Result<()> {
        check(params, grads)?;
        if self.m.is_empty() {
            self.m = params.iter().map(|p| Tensor1D::zeros(p.channels, p.length)).collect();
            self.v = self.m.clone();
        }
        check(&self.m, grads)?;
        self.steps += 1;
        let t = self.steps as i32;
        let c1 = 1.0 - libm::pow(self.beta1, t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, t as f64);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            for i in 0..p.values.len() {
                let d = g.values[i];
                m.values[i] = b1 * m.values[i] + (1.0 - b1) * d;
                v.values[i] = b2 * v.values[i] + (1.0 - b2) * d * d;
                let mhat = m.values[i] / c1;
                let vhat = v.values[i] / c2;
                p.values[i] -= lr * mhat / (math::sqrt(vhat) + eps);
            }
        }
        Ok(())
    }
}
