use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::{sample_stable, LevyError, LevyFamily, LevyMeasureSpec};
use crate::rng;
use crate::special::zeta;

/// Coefficients `beta_j` of the cylindrical process `L = sum_j beta_j L^(j) e_j`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientSequence {
    /// `beta_j = j^{-r}`.
    Power(f64),
    /// Finite list; modes past its end carry no noise.
    Explicit(Vec<f64>),
}

impl CoefficientSequence {
    /// `beta_j` for 1-based `j`.
    pub fn beta(&self, j: usize) -> f64 {
        match self {
            CoefficientSequence::Power(r) => (j as f64).powf(-r),
            CoefficientSequence::Explicit(v) => v.get(j - 1).copied().unwrap_or(0.0),
        }
    }

    pub fn values(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|j| self.beta(j)).collect()
    }

    /// Number of coefficients available, `None` for infinite rules.
    pub fn len(&self) -> Option<usize> {
        match self {
            CoefficientSequence::Power(_) => None,
            CoefficientSequence::Explicit(v) => Some(v.len()),
        }
    }

    /// `sum_j beta_j^theta` over the untruncated sequence.
    pub fn theta_sum(&self, theta: f64) -> Option<f64> {
        match self {
            CoefficientSequence::Power(r) if r * theta > 1.0 => Some(zeta(r * theta)),
            CoefficientSequence::Power(_) => None,
            CoefficientSequence::Explicit(v) => Some(v.iter().map(|b| b.abs().powf(theta)).sum()),
        }
    }

    fn validate(&self) -> Result<(), LevyError> {
        match self {
            CoefficientSequence::Power(r) if !r.is_finite() => {
                Err(LevyError::InvalidParameter(format!("power-rule exponent must be finite, got {r}")))
            }
            CoefficientSequence::Explicit(v) if v.is_empty() => {
                Err(LevyError::InvalidParameter("explicit beta list is empty".into()))
            }
            CoefficientSequence::Explicit(v) if v.iter().any(|b| !(b.is_finite() && *b >= 0.0)) => {
                Err(LevyError::InvalidParameter("explicit betas must be finite and nonnegative".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseBackend {
    /// Direct stable draw, scaled by `dt^{1/alpha}`.
    Exact,
    /// Jumps with `|y| <= cutoff` replaced by their (zero) compensator, the
    /// rest drawn as a compound Poisson sum.
    LevyIto { cutoff: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyNoiseSpec {
    pub measure: LevyMeasureSpec,
    pub betas: CoefficientSequence,
    pub theta: f64,
    pub backend: NoiseBackend,
}

/// Value of the summability functional `H_theta`, split into its two terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HTheta {
    pub big_jump_moment: f64,
    pub coefficient_sum: f64,
}

impl HTheta {
    pub fn total(&self) -> f64 {
        self.big_jump_moment + self.coefficient_sum
    }
}

/// A jump of size `|y| > 1` of `L^(j)` realized during a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BigJump {
    /// 1-based mode index.
    pub mode: usize,
    /// Unscaled jump of the scalar process (before multiplying by `beta_j`).
    pub size: f64,
}

/// Per-mode increments `beta_j (L^(j)_{t+dt} - L^(j)_t)` over one step.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrement {
    pub dt: f64,
    pub jumps: Vec<f64>,
    pub big_jumps: Vec<BigJump>,
    /// Per-mode bound on the dropped small-jump mass, `Levy-Ito` backend only.
    pub bias_bound: Option<f64>,
}

impl NoiseIncrement {
    pub fn zero(n: usize, dt: f64) -> Self {
        Self { dt, jumps: vec![0.0; n], big_jumps: Vec::new(), bias_bound: None }
    }

    /// `||Delta L||_0`.
    pub fn norm(&self) -> f64 {
        self.jumps.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl LevyNoiseSpec {
    pub fn new(
        measure: LevyMeasureSpec,
        betas: CoefficientSequence,
        theta: f64,
        backend: NoiseBackend,
    ) -> Result<Self, LevyError> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(LevyError::InvalidParameter(format!("theta must lie in (0, 1], got {theta}")));
        }
        betas.validate()?;
        match backend {
            NoiseBackend::Exact if matches!(measure.family, LevyFamily::TruncatedStable { .. }) => {
                return Err(LevyError::ExactUnavailable);
            }
            NoiseBackend::LevyIto { cutoff } if !(cutoff > 0.0 && cutoff <= 1.0) => {
                return Err(LevyError::InvalidParameter(format!("small-jump cutoff must lie in (0, 1], got {cutoff}")));
            }
            _ => {}
        }
        Ok(Self { measure, betas, theta, backend })
    }

    /// `H_theta = int_{|x|>1} |x|^theta nu(dx) + sum_j beta_j^theta`.
    pub fn h_theta(&self) -> Result<HTheta, LevyError> {
        let big_jump_moment = self.measure.big_jump_moment(self.theta).ok_or_else(|| {
            LevyError::HThetaDiverges(format!(
                "big-jump moment of order theta={} diverges for alpha={}",
                self.theta, self.measure.alpha
            ))
        })?;
        let coefficient_sum = self.betas.theta_sum(self.theta).ok_or_else(|| {
            LevyError::HThetaDiverges(format!("sum of beta_j^theta diverges for theta={}", self.theta))
        })?;
        Ok(HTheta { big_jump_moment, coefficient_sum })
    }

    /// `(dt int_{|y|<=cutoff} y^2 nu(dy))^{1/2}` for the Levy-Ito backend.
    pub fn small_jump_bias_bound(&self, dt: f64) -> Option<f64> {
        match self.backend {
            NoiseBackend::Exact => None,
            NoiseBackend::LevyIto { cutoff } => Some((dt * self.measure.small_jump_variance(cutoff)).sqrt()),
        }
    }

    /// One unscaled increment of `L^(j)` over `dt`, plus its jumps with `|y| > 1`.
    pub fn draw_scalar<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R, big: &mut Vec<f64>) -> f64 {
        match self.backend {
            NoiseBackend::Exact => {
                let scale = self.measure.stable_scale().expect("exact backend requires the stable family");
                let x = sample_stable(self.measure.alpha, scale * dt.powf(1.0 / self.measure.alpha), rng);
                // Exact draws carry no jump record; an increment exceeding 1
                // in modulus stands in for a big jump.
                if x.abs() > 1.0 {
                    big.push(x);
                }
                x
            }
            NoiseBackend::LevyIto { cutoff } => {
                let rate = self.measure.tail_mass(cutoff) * dt;
                if rate <= 0.0 {
                    return 0.0;
                }
                let count = Poisson::new(rate).expect("positive rate").sample(rng) as u64;
                let alpha = self.measure.alpha;
                let shrink = self.measure.radius().map_or(1.0, |r| 1.0 - (cutoff / r).powf(alpha));
                let mut sum = 0.0;
                for _ in 0..count {
                    let u: f64 = rng.random();
                    let magnitude = cutoff * (1.0 - u * shrink).powf(-1.0 / alpha);
                    let y = if rng.random::<bool>() { magnitude } else { -magnitude };
                    if magnitude > 1.0 {
                        big.push(y);
                    }
                    sum += y;
                }
                sum
            }
        }
    }

    /// Increment of mode `j` (1-based) over step `step` of `trajectory`, from
    /// its own counter-derived stream.
    pub fn draw_mode(&self, j: usize, dt: f64, seed: u64, trajectory: u64, step: u64, big: &mut Vec<BigJump>) -> f64 {
        let beta = self.betas.beta(j);
        if beta == 0.0 {
            return 0.0;
        }
        let mut rng = rng::stream(seed, trajectory, j as u64, step);
        let mut raw = Vec::new();
        let x = self.draw_scalar(dt, &mut rng, &mut raw);
        big.extend(raw.into_iter().map(|size| BigJump { mode: j, size }));
        beta * x
    }

    /// Increments for the first `n` modes.
    pub fn increment(&self, n: usize, dt: f64, seed: u64, trajectory: u64, step: u64) -> Result<NoiseIncrement, LevyError> {
        if !(dt > 0.0) {
            return Err(LevyError::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        if let Some(len) = self.betas.len() {
            if n > len {
                return Err(LevyError::TooFewCoefficients { requested: n, available: len });
            }
        }
        let mut big_jumps = Vec::new();
        let jumps = (1..=n).map(|j| self.draw_mode(j, dt, seed, trajectory, step, &mut big_jumps)).collect();
        Ok(NoiseIncrement { dt, jumps, big_jumps, bias_bound: self.small_jump_bias_bound(dt) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec(theta: f64, betas: CoefficientSequence) -> LevyNoiseSpec {
        LevyNoiseSpec::new(LevyMeasureSpec::stable(1.5, 1.0).unwrap(), betas, theta, NoiseBackend::Exact).unwrap()
    }

    #[test]
    fn h_theta_headline_value() {
        let h = spec(1.0, CoefficientSequence::Power(2.0)).h_theta().unwrap();
        assert!((h.big_jump_moment - 4.0).abs() < 1e-14);
        assert!((h.coefficient_sum - PI * PI / 6.0).abs() < 1e-14);
        assert!((h.total() - 5.644934066848226).abs() < 1e-12);
    }

    #[test]
    fn h_theta_oracle_by_quadrature() {
        // int_{|x|>1} |x| nu(dx) = 2 int_0^1 s^{alpha-theta-1} ... after x = 1/s.
        let (alpha, theta) = (1.5, 1.0);
        let q = crate::quadrature::integrate(
            |s: f64| if s == 0.0 { 0.0 } else { 2.0 * s.powf(alpha - theta - 1.0) },
            0.0,
            1.0,
            1e-12,
            1e-12,
        )
        .unwrap();
        let series: f64 = (1..2_000_000u64).map(|j| (j as f64).powi(-2)).sum::<f64>() + 1.0 / 2_000_000.0;
        let h = spec(theta, CoefficientSequence::Power(2.0)).h_theta().unwrap();
        assert!((q.value - h.big_jump_moment).abs() < 1e-8);
        assert!((series - h.coefficient_sum).abs() < 1e-9);
    }

    #[test]
    fn h_theta_divergence_and_truncation() {
        let s = spec(1.0, CoefficientSequence::Power(2.0));
        let s = LevyNoiseSpec { theta: 1.5, ..s };
        assert!(matches!(s.h_theta(), Err(LevyError::HThetaDiverges(_))));
        let s = spec(0.4, CoefficientSequence::Power(2.0));
        assert!(matches!(s.h_theta(), Err(LevyError::HThetaDiverges(_))));
        let t = LevyNoiseSpec::new(
            LevyMeasureSpec::truncated(1.5, 1.0, 1.0).unwrap(),
            CoefficientSequence::Explicit(vec![1.0]),
            1.0,
            NoiseBackend::LevyIto { cutoff: 1e-3 },
        )
        .unwrap();
        assert_eq!(t.h_theta().unwrap().total(), 1.0);
    }

    #[test]
    fn constructor_rejects_bad_specs() {
        let m = LevyMeasureSpec::stable(1.5, 1.0).unwrap();
        assert!(LevyNoiseSpec::new(m, CoefficientSequence::Power(2.0), 1.5, NoiseBackend::Exact).is_err());
        assert!(LevyNoiseSpec::new(m, CoefficientSequence::Power(2.0), 0.0, NoiseBackend::Exact).is_err());
        assert!(LevyNoiseSpec::new(m, CoefficientSequence::Explicit(vec![]), 1.0, NoiseBackend::Exact).is_err());
        assert!(LevyNoiseSpec::new(m, CoefficientSequence::Explicit(vec![-1.0]), 1.0, NoiseBackend::Exact).is_err());
        let t = LevyMeasureSpec::truncated(1.5, 1.0, 2.0).unwrap();
        assert!(matches!(
            LevyNoiseSpec::new(t, CoefficientSequence::Power(2.0), 1.0, NoiseBackend::Exact),
            Err(LevyError::ExactUnavailable)
        ));
    }

    #[test]
    fn increments_are_reproducible_and_independent_of_size() {
        let s = spec(1.0, CoefficientSequence::Power(2.0));
        let a = s.increment(8, 1e-2, 5, 3, 11).unwrap();
        let b = s.increment(8, 1e-2, 5, 3, 11).unwrap();
        assert_eq!(a, b);
        let c = s.increment(16, 1e-2, 5, 3, 11).unwrap();
        assert_eq!(&c.jumps[..8], &a.jumps[..]);
        let d = s.increment(8, 1e-2, 5, 3, 12).unwrap();
        assert_ne!(a.jumps, d.jumps);
        assert!(s.increment(8, 0.0, 5, 3, 11).is_err());
        let e = spec(1.0, CoefficientSequence::Explicit(vec![1.0, 0.0]));
        assert!(e.increment(3, 0.1, 1, 0, 0).is_err());
        let inc = e.increment(2, 0.1, 1, 0, 0).unwrap();
        assert_eq!(inc.jumps[1], 0.0);
    }

    #[test]
    fn levy_ito_reports_bias_and_logs_only_big_jumps() {
        let s = LevyNoiseSpec::new(
            LevyMeasureSpec::stable(1.5, 1.0).unwrap(),
            CoefficientSequence::Power(1.0),
            1.0,
            NoiseBackend::LevyIto { cutoff: 1e-2 },
        )
        .unwrap();
        let inc = s.increment(4, 0.5, 9, 0, 0).unwrap();
        let expected = (0.5 * 2.0 * 0.01f64.powf(0.5) / 0.5).sqrt();
        assert!((inc.bias_bound.unwrap() - expected).abs() < 1e-15);
        for b in &inc.big_jumps {
            assert!(b.size.abs() > 1.0);
        }
    }
}
