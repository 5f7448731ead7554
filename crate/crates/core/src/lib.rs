//! Time encoding machines on periodic shift-invariant spaces.
//!
//! Signals f(t) = Σ c_k λ(t − k) are encoded into spike trains by crossing
//! or integrate-and-fire encoders and reconstructed by direct least squares
//! or by the projection and frame iterations. [`noiselab`] measures how
//! reconstruction degrades when spike times are quantized.

pub mod cli;
pub mod decoders;
pub mod encoders;
pub mod error;
pub mod generators;
pub mod linalg;
pub mod noiselab;
pub mod quadrature;
pub mod siss;

pub use error::{Error, Result};
pub use generators::{GeneratorSpec, Order};
pub use siss::{PeriodicSignal, PeriodicSpace};
