//! Time stepping for the Galerkin system
//! `du = [Delta u - Pi_n((u . grad) u)] dt + dL^n`, `u_0 = Pi_n phi`.

mod config;
mod ensemble;
mod record;
mod stepper;

use thiserror::Error;

pub use config::{InitialCondition, Scheme, SolverConfig};
pub use ensemble::{
    galerkin_gap, galerkin_pair, map_trajectories, run_trajectory, simulate_ensemble, EnsembleResult, HorizonStats,
    RunContext, StepObserver, TrajectorySummary,
};
pub use record::{StepScalars, TrajectoryRecord};
pub use stepper::{step, Stepper};

use crate::levy::LevyError;
use crate::spectral::SpectralError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite state at step {step} of trajectory {trajectory}")]
    BlowUp { trajectory: u64, step: usize },
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}
