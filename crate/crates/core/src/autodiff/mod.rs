//! Reverse-mode differentiation over `channels × length` tensors.
//!
//! A [`Tape`] records one forward pass. Parameters enter as leaves
//! ([`Tape::param`]), inputs as constants; [`Tape::backward`] walks the tape
//! in reverse once and hands back a [`Gradients`] table.

mod optim;
mod tape;
mod tensor;

pub use optim::{gd_step, Adam, RmsProp};
pub use tape::{Activation, BnMode, Gradients, Tape, Var};
pub use tensor::Tensor1D;

pub(crate) use tensor::dot;
