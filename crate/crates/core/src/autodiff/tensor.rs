use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A `channels × length` buffer of doubles, row-major (one row per channel).
///
/// Convolution kernels are stored as `(in_channels · out_channels) × k`,
/// row `ci · out_channels + co`; linear weights as `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor1D {
    pub channels: usize,
    pub length: usize,
    pub values: Vec<f64>,
}

impl Tensor1D {
    pub fn new(channels: usize, length: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != channels * length {
            return Err(Error::Shape {
                op: "tensor construction",
                left: (channels, length),
                right: (1, values.len()),
            });
        }
        Ok(Tensor1D {
            channels,
            length,
            values,
        })
    }

    pub fn zeros(channels: usize, length: usize) -> Self {
        Tensor1D::filled(channels, length, 0.0)
    }

    pub fn filled(channels: usize, length: usize, value: f64) -> Self {
        Tensor1D {
            channels,
            length,
            values: vec![value; channels * length],
        }
    }

    /// A single-channel row.
    pub fn row_vector(values: Vec<f64>) -> Self {
        Tensor1D {
            channels: 1,
            length: values.len(),
            values,
        }
    }

    /// A column (`n × 1`), the layout recurrent states use.
    pub fn column(values: Vec<f64>) -> Self {
        Tensor1D {
            channels: values.len(),
            length: 1,
            values,
        }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor1D {
            channels: 1,
            length: 1,
            values: vec![value],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.channels, self.length)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, c: usize) -> &[f64] {
        &self.values[c * self.length..(c + 1) * self.length]
    }

    pub fn row_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.values[c * self.length..(c + 1) * self.length]
    }

    pub fn at(&self, c: usize, l: usize) -> f64 {
        self.values[c * self.length + l]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &Tensor1D) -> f64 {
        dot(&self.values, &other.values)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four independent partial sums; the fixed order keeps results
    // reproducible while letting the compiler vectorize.
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut tail = 0.0;
    for j in 4 * chunks..n {
        tail += a[j] * b[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
