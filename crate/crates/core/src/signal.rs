use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A uniformly sampled scalar time series.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub values: Vec<f64>,
    /// Sample step in dimensionless time units (1 for discrete maps).
    pub dt: f64,
    pub t0: f64,
}

impl Signal {
    pub fn new(values: Vec<f64>, dt: f64) -> Self {
        Signal {
            values,
            dt,
            t0: 0.0,
        }
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same sampling grid, new values.
    pub fn like(&self, values: Vec<f64>) -> Signal {
        Signal {
            values,
            dt: self.dt,
            t0: self.t0,
        }
    }

    pub fn slice(&self, start: usize, len: usize) -> Result<Signal> {
        if start + len > self.len() {
            return Err(Error::Shape {
                op: "signal slice",
                left: (1, self.len()),
                right: (1, start + len),
            });
        }
        Ok(Signal {
            values: self.values[start..start + len].to_vec(),
            dt: self.dt,
            t0: self.t0 + start as f64 * self.dt,
        })
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub(crate) fn ensure_nonempty(&self, what: &str) -> Result<()> {
        if self.is_empty() {
            Err(Error::domain(alloc::format!("{what} must be nonempty")))
        } else {
            Ok(())
        }
    }
}
