//! Divergence-free Fourier eigenbasis of the Stokes operator on the unit
//! torus, spectral fields and their Sobolev norms.

mod basis;
mod field;
mod nonlinear;
pub mod snapshot;

use thiserror::Error;

pub use basis::{Basis, BasisMode, Phase, WaveVector};
pub use field::{SpectralField, VelocityGrid};
pub use nonlinear::{Collocation, NonlinearBackend};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("basis size must be at least 1")]
    EmptyBasis,
    #[error("expected {expected} coefficients, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("cannot project onto {m} modes of a {n}-mode field")]
    ProjectionTooLarge { m: usize, n: usize },
    #[error("grid resolution {resolution} aliases the basis; at least {required} points per direction are needed")]
    Aliasing { resolution: usize, required: usize },
    #[error("snapshot line {line}: {message}")]
    Snapshot { line: usize, message: String },
}
