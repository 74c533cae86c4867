//! Deep chaos synchronization: recovering a chaotic drive signal from noisy
//! observations and rebuilding the slave attractors at the receiver.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure numerics.
//! File formats, the command line and wall-clock timing live in the `dcs`
//! companion crate.
//!
//! Layout, bottom-up:
//!
//! * [`dynamics`]: Lorenz / Rössler / Henon generators, RK4 integration and the
//!   driven response subsystem.
//! * [`channel`]: seeded random streams and AWGN corruption.
//! * [`autodiff`]: a small tape-based reverse-mode engine over
//!   `channels × length` tensors plus RMSProp, ADAM and plain gradient descent.
//! * [`dip`]: the untrained transposed-convolution generator fitted to a single
//!   noisy observation.
//! * [`rnn`]: the trainable stacked-GRU encoder/decoder used for comparison.
//! * [`ga`]: genetic search for the unknown initial condition `x0`.
//! * [`sync`]: complete receivers and the error metrics.

#![no_std]
#![deny(rust_2018_idioms)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod autodiff;
pub mod channel;
pub mod dip;
pub mod dynamics;
mod error;
pub mod ga;
mod math;
pub mod rnn;
mod signal;
pub mod sync;

pub use error::{Error, Result};
pub use signal::Signal;
