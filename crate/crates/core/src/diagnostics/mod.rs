//! Verification surface: the functional `f(u) = (||u||^2 + 1)^{theta/2}` and
//! its calculus, ensemble estimators for the fractional moment bound,
//! characteristic-function tests of the martingale part of weak solutions,
//! spectral tail energy and a Skorohod-distance upper bound.

mod functional;
mod martingale;
mod moments;
mod paths;

use thiserror::Error;

pub use functional::{f_lipschitz_check, f_theta, grad_f_theta, hessian_f_theta, hessian_trace_bound};
pub use martingale::{
    independence_test, martingale_cf_test, martingale_cf_with_halving, martingale_samples, CfVerdict, CharFunPoint, CharFunReport,
    HalvingReport, IndependencePoint, IndependenceReport, MartingaleSamples,
};
pub use moments::{
    gradient_moment_report, moment_bound_report, AffineFit, GradientMomentReport, MomentReport, StabilityCheck,
};
pub use paths::{skorohod_upper_bound, tail_energy, tail_energy_check, TailEnergyCheck};

use crate::levy::LevyError;
use crate::solver::SolverError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("Lipschitz bound violated: |f(u) - f(v)| = {lhs} > ||u - v||^theta = {rhs} (theta = {theta})")]
    LipschitzViolation { theta: f64, lhs: f64, rhs: f64, u: Vec<f64>, v: Vec<f64> },
    #[error("fields live on bases of size {left} and {right}")]
    BasisMismatch { left: usize, right: usize },
    #[error("at least {required} trajectories are required, got {found}")]
    TooFewTrajectories { required: usize, found: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Levy(#[from] LevyError),
}
