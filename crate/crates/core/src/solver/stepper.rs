use std::sync::Arc;

use super::{Scheme, SolverError};
use crate::levy::NoiseIncrement;
use crate::spectral::{Basis, SpectralField};

/// Precomputed per-mode factors for one `(basis, dt, scheme)` triple.
#[derive(Debug, Clone)]
pub struct Stepper {
    basis: Arc<Basis>,
    dt: f64,
    /// Multiplies the current coefficient.
    decay: Vec<f64>,
    /// Multiplies the nonlinear term.
    forcing: Vec<f64>,
    /// Multiplies the noise increment.
    noise: Vec<f64>,
    scratch: Vec<f64>,
}

impl Stepper {
    pub fn new(basis: Arc<Basis>, dt: f64, scheme: Scheme) -> Self {
        let n = basis.len();
        let (mut decay, mut forcing, mut noise) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for lambda in basis.eigenvalues() {
            match scheme {
                Scheme::ExponentialEuler => {
                    let em1 = (-lambda * dt).exp_m1();
                    decay.push(1.0 + em1);
                    forcing.push(-em1 / lambda);
                    noise.push(1.0);
                }
                Scheme::SemiImplicitEuler => {
                    let r = 1.0 / (1.0 + lambda * dt);
                    decay.push(r);
                    forcing.push(dt * r);
                    noise.push(r);
                }
            }
        }
        Self { basis, dt, decay, forcing, noise, scratch: vec![0.0; n] }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    /// Drift part of one step: the state just before the step's jump.
    pub fn drift(&mut self, u: &mut [f64]) {
        let n = u.len();
        self.basis.triads().apply(u, n, &mut self.scratch);
        for j in 0..n {
            u[j] = self.decay[j] * u[j] - self.forcing[j] * self.scratch[j];
        }
    }

    /// Adds the noise increment after [`Stepper::drift`].
    pub fn kick(&self, u: &mut [f64], jumps: &[f64]) {
        for ((a, w), dl) in u.iter_mut().zip(&self.noise).zip(jumps) {
            *a += w * dl;
        }
    }
}

/// One step from `u`, with the noise increment added at the end of the step.
pub fn step(u: &SpectralField, dt: f64, increment: &NoiseIncrement, scheme: Scheme) -> Result<SpectralField, SolverError> {
    if increment.jumps.len() != u.len() {
        return Err(crate::spectral::SpectralError::LengthMismatch { expected: u.len(), found: increment.jumps.len() }.into());
    }
    let mut s = Stepper::new(u.basis().clone(), dt, scheme);
    let mut c = u.coeffs().to_vec();
    s.drift(&mut c);
    s.kick(&mut c, &increment.jumps);
    if c.iter().any(|a| !a.is_finite()) {
        return Err(SolverError::BlowUp { trajectory: 0, step: 1 });
    }
    Ok(SpectralField::from_coeffs(u.basis().clone(), c)?)
}
