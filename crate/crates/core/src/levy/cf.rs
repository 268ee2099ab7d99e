use num_complex::Complex64;
use rayon::prelude::*;

use super::{LevyError, LevyNoiseSpec};
use crate::rng;
use crate::stats::{empirical_cf, EmpiricalCf};

/// One grid point of an empirical-vs-theoretical characteristic function comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfPoint {
    pub xi: f64,
    pub empirical: EmpiricalCf,
    pub theoretical: Complex64,
    pub z: f64,
}

impl CfPoint {
    pub fn passes(&self, sigmas: f64) -> bool {
        self.z < sigmas
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfCheckReport {
    pub dt: f64,
    pub draws: usize,
    pub points: Vec<CfPoint>,
}

impl CfCheckReport {
    /// Every grid point within three Monte Carlo standard errors.
    pub fn passed(&self) -> bool {
        self.points.iter().all(|p| p.passes(3.0))
    }
}

/// `n_draws` independent copies of `Delta L_1` over `dt`.
pub fn sample_first_mode(spec: &LevyNoiseSpec, dt: f64, n_draws: usize, seed: u64) -> Vec<f64> {
    let beta = spec.betas.beta(1);
    (0..n_draws as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i, 1, 0);
            beta * spec.draw_scalar(dt, &mut r, &mut Vec::new())
        })
        .collect()
}

/// Compares the empirical characteristic function of `Delta L_1` with
/// `exp(dt psi(beta_1 xi))`.
pub fn increment_cf_check(
    spec: &LevyNoiseSpec,
    dt: f64,
    xi_grid: &[f64],
    n_draws: usize,
    seed: u64,
) -> Result<CfCheckReport, LevyError> {
    if n_draws < 10_000 {
        return Err(LevyError::InvalidParameter(format!("at least 10^4 draws are required, got {n_draws}")));
    }
    let xs = sample_first_mode(spec, dt, n_draws, seed);
    let beta = spec.betas.beta(1);
    let points = xi_grid
        .iter()
        .map(|&xi| {
            let empirical = empirical_cf(&xs, xi);
            let theoretical = (spec.measure.symbol(beta * xi)? * dt).exp();
            Ok(CfPoint { xi, empirical, theoretical, z: empirical.z_score(theoretical, 0.0) })
        })
        .collect::<Result<_, LevyError>>()?;
    Ok(CfCheckReport { dt, draws: n_draws, points })
}

/// Empirical `E|X|^theta` of unit-scale stable draws over growing sample
/// sizes; stabilizes for `theta < alpha` and keeps growing otherwise.
pub fn fractional_moment_profile(alpha: f64, theta: f64, sizes: &[usize], seed: u64) -> Vec<f64> {
    let max = sizes.iter().copied().max().unwrap_or(0);
    let mut r = rng::stream(seed, rng::PILOT_STREAM, 0, 0);
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(sizes.len());
    let mut sorted_sizes: Vec<usize> = sizes.to_vec();
    sorted_sizes.sort_unstable();
    let mut next = sorted_sizes.iter().peekable();
    for i in 1..=max {
        acc += super::sample_stable(alpha, 1.0, &mut r).abs().powf(theta);
        while next.peek().is_some_and(|&&s| s == i) {
            out.push(acc / i as f64);
            next.next();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{CoefficientSequence, LevyMeasureSpec, NoiseBackend};
    use super::*;

    fn spec(alpha: f64) -> LevyNoiseSpec {
        LevyNoiseSpec::new(
            LevyMeasureSpec::stable(alpha, 1.0).unwrap(),
            CoefficientSequence::Power(2.0),
            0.5,
            NoiseBackend::Exact,
        )
        .unwrap()
    }

    #[test]
    fn cf_at_zero_is_exactly_one() {
        let r = increment_cf_check(&spec(1.5), 0.1, &[0.0], 10_000, 1).unwrap();
        assert_eq!(r.points[0].empirical.value, Complex64::new(1.0, 0.0));
        assert_eq!(r.points[0].theoretical, Complex64::new(1.0, 0.0));
        assert!(r.passed());
    }

    #[test]
    fn cf_matches_symbol() {
        let r = increment_cf_check(&spec(1.5), 0.1, &[0.5, 1.0, 2.0, 4.0], 200_000, 2).unwrap();
        assert!(r.passed(), "{r:?}");
        for p in &r.points {
            assert!(p.empirical.value.norm() <= 1.0);
        }
    }

    #[test]
    fn dt_additivity() {
        let s = spec(1.5);
        let a = sample_first_mode(&s, 0.1, 200_000, 3);
        let b = sample_first_mode(&s, 0.1, 200_000, 4);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let c = sample_first_mode(&s, 0.2, 200_000, 5);
        for xi in [0.5, 1.0, 2.0] {
            let one = empirical_cf(&a, xi);
            let two = empirical_cf(&c, xi);
            let composed = empirical_cf(&sum, xi);
            let se = (two.se_re.powi(2) + (2.0 * one.value.re * one.se_re).powi(2)).sqrt();
            assert!((two.value.re - one.value.re.powi(2)).abs() < 3.0 * se, "xi={xi}");
            assert!((two.value.re - composed.value.re).abs() < 3.0 * (two.se_re.hypot(composed.se_re)));
        }
    }

    #[test]
    fn too_few_draws_rejected() {
        assert!(increment_cf_check(&spec(1.5), 0.1, &[1.0], 100, 1).is_err());
    }

    #[test]
    fn fractional_moment_boundary() {
        let sizes = [1_000, 10_000, 100_000, 1_000_000];
        let below = fractional_moment_profile(1.5, 0.5, &sizes, 7);
        let spread = below.iter().cloned().fold(f64::MIN, f64::max) / below.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1.1, "{below:?}");
        // Infinite moment: the running mean keeps growing; a single sample
        // path can be dominated by one early jump, so take the median ratio.
        let mut ratios: Vec<f64> = (0..9)
            .map(|seed| {
                let above = fractional_moment_profile(0.8, 1.6, &sizes, seed);
                above[3] / above[0]
            })
            .collect();
        ratios.sort_by(f64::total_cmp);
        assert!(ratios[4] > 3.0, "{ratios:?}");
    }
}
