use super::ensemble::SummaryAccumulator;
use super::HorizonStats;
use crate::levy::BigJump;
use crate::spectral::SpectralField;

/// Scalar diagnostics at one step. `l2_left`/`h1_left` are the left limits,
/// i.e. the state after the drift but before the step's jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepScalars {
    pub t: f64,
    pub l2: f64,
    pub h1: f64,
    pub f_theta: f64,
    pub big_jumps: usize,
    pub l2_left: f64,
    pub h1_left: f64,
}

impl StepScalars {
    pub(crate) fn new(t: f64, theta: f64, lambdas: &[f64], left: &[f64], u: &[f64], big_jumps: usize) -> Self {
        let (l2, h1) = norms(u, lambdas);
        let (l2_left, h1_left) = norms(left, lambdas);
        Self { t, l2, h1, f_theta: (l2 * l2 + 1.0).powf(theta / 2.0), big_jumps, l2_left, h1_left }
    }
}

/// `(||u||_0, ||grad u||_0)` from coefficients.
pub(crate) fn norms(u: &[f64], lambdas: &[f64]) -> (f64, f64) {
    let (mut l2, mut h1) = (0.0, 0.0);
    for (a, l) in u.iter().zip(lambdas) {
        l2 += a * a;
        h1 += l * a * a;
    }
    (l2.sqrt(), h1.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub theta: f64,
    pub dt: f64,
    /// Snapshot times, starting at 0.
    pub times: Vec<f64>,
    pub fields: Vec<SpectralField>,
    /// One entry per step including step 0.
    pub scalars: Vec<StepScalars>,
    /// `(step, jump)` for every logged jump with `|y| > 1`.
    pub big_jump_log: Vec<(usize, BigJump)>,
}

impl TrajectoryRecord {
    /// Per-horizon summary, identical to the one an ensemble computes.
    pub fn summary(&self, horizons: &[f64]) -> Vec<HorizonStats> {
        let mut acc = SummaryAccumulator::new(self.theta, self.dt, horizons);
        for s in &self.scalars {
            acc.push(s);
        }
        acc.finish()
    }

    pub fn final_field(&self) -> &SpectralField {
        self.fields.last().expect("a record holds at least the initial field")
    }
}
