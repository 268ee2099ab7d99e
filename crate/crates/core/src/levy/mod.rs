//! Scalar purely discontinuous Lévy noise of stable type and the cylindrical
//! process `L_t = sum_j beta_j L^(j)_t e_j` built from it.

mod cf;
mod measure;
mod noise;
mod sampler;
mod stable;

use thiserror::Error;

pub use cf::{fractional_moment_profile, increment_cf_check, sample_first_mode, CfCheckReport, CfPoint};
pub use measure::{LevyFamily, LevyMeasureSpec};
pub use noise::{BigJump, CoefficientSequence, HTheta, LevyNoiseSpec, NoiseBackend, NoiseIncrement};
pub use sampler::{backend_agreement, sampler_check, stable_draws, AgreementPoint, BackendAgreement, SamplerReport, SelfSimilarity};
pub use stable::sample_stable;

use crate::quadrature::QuadratureError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LevyError {
    #[error("invalid noise parameter: {0}")]
    InvalidParameter(String),
    #[error("H_theta diverges: {0}")]
    HThetaDiverges(String),
    #[error("the exact backend needs the untruncated stable family; use the levy-ito backend")]
    ExactUnavailable,
    #[error("{requested} modes requested but only {available} coefficients are given")]
    TooFewCoefficients { requested: usize, available: usize },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}
