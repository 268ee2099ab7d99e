use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};

use super::SolverError;
use crate::levy::LevyNoiseSpec;
use crate::rng;
use crate::spectral::{Basis, Phase, SpectralField, WaveVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Exact linear flow, `phi_1`-weighted nonlinearity.
    #[default]
    ExponentialEuler,
    /// Implicit viscous term, explicit nonlinearity.
    SemiImplicitEuler,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Zero,
    SingleMode { wave: WaveVector, phase: Phase, amplitude: f64 },
    /// Coefficients proportional to `lambda_j^{-gamma/2} N(0,1)`, rescaled to
    /// the given `L^2` norm.
    RandomSobolev { gamma: f64, norm: f64 },
    Field(SpectralField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub n: usize,
    pub dt: f64,
    pub horizon: f64,
    pub initial: InitialCondition,
    /// `None` switches the forcing off.
    pub noise: Option<LevyNoiseSpec>,
    /// Moment index used by the scalar diagnostics.
    pub theta: f64,
    pub scheme: Scheme,
    pub seed: u64,
    pub snapshot_stride: usize,
}

impl SolverConfig {
    pub fn deterministic(n: usize, dt: f64, horizon: f64, initial: InitialCondition) -> Self {
        Self {
            n,
            dt,
            horizon,
            initial,
            noise: None,
            theta: 1.0,
            scheme: Scheme::ExponentialEuler,
            seed: 0,
            snapshot_stride: 1,
        }
    }

    pub fn with_noise(mut self, noise: LevyNoiseSpec) -> Self {
        self.theta = noise.theta;
        self.noise = Some(noise);
        self
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Step index closest to time `t`.
    pub fn step_of(&self, t: f64) -> usize {
        (t / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::InvalidConfig(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be nonnegative, got {}", self.horizon));
        }
        let steps = self.horizon / self.dt;
        if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
            return bad(format!("horizon {} is not a whole number of steps of {}", self.horizon, self.dt));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return bad(format!("theta must lie in (0, 1], got {}", self.theta));
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride must be at least 1".into());
        }
        if let Some(noise) = &self.noise {
            noise.h_theta()?;
            if let Some(len) = noise.betas.len() {
                if len < self.n {
                    return Err(crate::levy::LevyError::TooFewCoefficients { requested: self.n, available: len }.into());
                }
            }
        }
        Ok(())
    }

    /// `Pi_n phi` on the size-`n` basis.
    pub fn initial_field(&self, basis: &Arc<Basis>) -> Result<SpectralField, SolverError> {
        let n = basis.len();
        match &self.initial {
            InitialCondition::Zero => Ok(SpectralField::zeros(basis.clone())),
            InitialCondition::SingleMode { wave, phase, amplitude } => {
                let j = basis.position(*wave, *phase).ok_or_else(|| {
                    SolverError::InvalidConfig(format!("mode {wave}{} is not among the first {n} modes", phase.code()))
                })?;
                let mut c = vec![0.0; n];
                c[j] = *amplitude;
                Ok(SpectralField::from_coeffs(basis.clone(), c)?)
            }
            InitialCondition::RandomSobolev { gamma, norm } => {
                let c: Vec<f64> = basis
                    .modes()
                    .iter()
                    .map(|m| {
                        let mut r = rng::stream(self.seed, rng::INITIAL_CONDITION_STREAM, m.index as u64, 0);
                        let g: f64 = StandardNormal.sample(&mut r);
                        m.eigenvalue.powf(-gamma / 2.0) * g
                    })
                    .collect();
                let l2 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
                let scale = if l2 > 0.0 { norm / l2 } else { 0.0 };
                Ok(SpectralField::from_coeffs(basis.clone(), c.into_iter().map(|x| x * scale).collect())?)
            }
            InitialCondition::Field(f) => Ok(f.rebase(basis.clone())),
        }
    }
}
