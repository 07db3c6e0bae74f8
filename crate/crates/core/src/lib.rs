//! Approximate blow-up solutions of the focusing energy-critical quintic wave
//! equation in three dimensions, with modulated scaling λ(t) = t^(−1−ν)·e^(−ε₀ sin log t).

pub mod cheb;
pub mod correction_one;
pub mod correction_two;
pub mod error;
pub mod jet;
pub mod pipeline;
pub mod profile;
pub mod quad;
pub mod residual;
pub mod scaling;
pub mod simulator;
pub mod spectral;

pub use error::{Error, Result};
