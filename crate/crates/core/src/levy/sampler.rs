use num_complex::Complex64;
use rayon::prelude::*;

use super::{sample_stable, CoefficientSequence, LevyError, LevyMeasureSpec, LevyNoiseSpec, NoiseBackend};
use crate::rng;
use crate::stats::{empirical_cf, hill_estimator, ks_critical_value, ks_statistic, quantile, EmpiricalCf};

const CHUNK: usize = 4096;

/// `count` unit-scale stable draws, reproducible for any thread count.
pub fn stable_draws(alpha: f64, count: usize, seed: u64, stream: u64) -> Vec<f64> {
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut r = rng::stream(seed, stream, c as u64, 0);
            let len = CHUNK.min(count - c * CHUNK);
            (0..len).map(move |_| sample_stable(alpha, 1.0, &mut r)).collect::<Vec<_>>()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfSimilarity {
    pub time: f64,
    pub pieces: usize,
    pub statistic: f64,
    /// Two-sample KS critical value at the 1% level.
    pub critical_value: f64,
}

impl SelfSimilarity {
    pub fn passed(&self) -> bool {
        self.statistic < self.critical_value
    }
}

/// Summary of the law of unit-scale symmetric stable draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerReport {
    pub alpha: f64,
    pub draws: usize,
    pub median_abs: f64,
    /// `median |X|` of the standard Cauchy law, present for `alpha = 1`.
    pub cauchy_median: Option<f64>,
    pub hill_k: usize,
    pub hill_alpha: f64,
    pub self_similarity: SelfSimilarity,
}

impl SamplerReport {
    pub fn median_passed(&self, tolerance: f64) -> Option<bool> {
        self.cauchy_median.map(|m| (self.median_abs - m).abs() <= tolerance)
    }

    pub fn hill_passed(&self, tolerance: f64) -> bool {
        (self.hill_alpha - self.alpha).abs() <= tolerance
    }
}

/// Median, Hill tail index (top `draws / 200` order statistics) and a
/// self-similarity check: `time^{1/alpha} X` against a sum of `pieces`
/// increments over `time / pieces`, on `similarity_draws` of each.
pub fn sampler_check(alpha: f64, draws: usize, similarity_draws: usize, seed: u64) -> Result<SamplerReport, LevyError> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(LevyError::InvalidParameter(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    if draws < 1000 || similarity_draws < 100 {
        return Err(LevyError::InvalidParameter("at least 1000 draws and 100 similarity draws are required".into()));
    }
    let xs = stable_draws(alpha, draws, seed, 0);
    let abs: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
    let hill_k = draws / 200;
    let (time, pieces) = (2.0f64, 16usize);
    let direct: Vec<f64> =
        stable_draws(alpha, similarity_draws, seed, 1).into_iter().map(|x| x * time.powf(1.0 / alpha)).collect();
    let step_scale = (time / pieces as f64).powf(1.0 / alpha);
    let parts = stable_draws(alpha, similarity_draws * pieces, seed, 2);
    let summed: Vec<f64> = parts.chunks(pieces).map(|c| c.iter().sum::<f64>() * step_scale).collect();
    Ok(SamplerReport {
        alpha,
        draws,
        median_abs: quantile(&abs, 0.5),
        cauchy_median: (alpha == 1.0).then_some(1.0),
        hill_k,
        hill_alpha: hill_estimator(&abs, hill_k),
        self_similarity: SelfSimilarity {
            time,
            pieces,
            statistic: ks_statistic(&direct, &summed),
            critical_value: ks_critical_value(similarity_draws, similarity_draws, 0.01),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgreementPoint {
    pub xi: f64,
    pub exact: EmpiricalCf,
    pub levy_ito: EmpiricalCf,
    pub theoretical: Complex64,
    /// Larger of the real and imaginary z-scores of the difference.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendAgreement {
    pub alpha: f64,
    pub dt: f64,
    pub cutoff: f64,
    pub draws: usize,
    pub points: Vec<AgreementPoint>,
}

impl BackendAgreement {
    pub fn passed(&self, sigmas: f64) -> bool {
        self.points.iter().all(|p| p.z < sigmas)
    }
}

/// Empirical characteristic functions of `Delta L_1` over `dt` under both
/// backends, with unit coefficients and unit intensity.
pub fn backend_agreement(
    alpha: f64,
    dt: f64,
    cutoff: f64,
    xi_grid: &[f64],
    draws: usize,
    seed: u64,
) -> Result<BackendAgreement, LevyError> {
    let measure = LevyMeasureSpec::stable(alpha, 1.0)?;
    let spec = |backend| LevyNoiseSpec::new(measure, CoefficientSequence::Explicit(vec![1.0]), 1.0, backend);
    let exact = spec(NoiseBackend::Exact)?;
    let ito = spec(NoiseBackend::LevyIto { cutoff })?;
    let a = super::sample_first_mode(&exact, dt, draws, seed);
    let b = super::sample_first_mode(&ito, dt, draws, seed.wrapping_add(1));
    let points = xi_grid
        .iter()
        .map(|&xi| {
            let (ea, eb) = (empirical_cf(&a, xi), empirical_cf(&b, xi));
            let z = |d: f64, s1: f64, s2: f64| {
                let s = s1.hypot(s2);
                if d == 0.0 {
                    0.0
                } else {
                    d.abs() / s
                }
            };
            let d = ea.value - eb.value;
            Ok(AgreementPoint {
                xi,
                exact: ea,
                levy_ito: eb,
                theoretical: (measure.symbol(xi)? * dt).exp(),
                z: z(d.re, ea.se_re, eb.se_re).max(z(d.im, ea.se_im, eb.se_im)),
            })
        })
        .collect::<Result<_, LevyError>>()?;
    Ok(BackendAgreement { alpha, dt, cutoff, draws, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_do_not_depend_on_thread_count() {
        let a = stable_draws(1.3, 10_000, 4, 0);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| stable_draws(1.3, 10_000, 4, 0));
        assert_eq!(a, b);
        assert_eq!(a.len(), 10_000);
    }

    #[test]
    fn cauchy_median_and_similarity() {
        let r = sampler_check(1.0, 200_000, 20_000, 7).unwrap();
        // SE of the median of |X| is pi / (2 sqrt(n)).
        assert!((r.median_abs - 1.0).abs() < 5.0 * std::f64::consts::PI / (2.0 * (200_000f64).sqrt()));
        assert!(r.self_similarity.passed(), "{r:?}");
        assert!(r.hill_passed(0.1));
    }

    #[test]
    fn similarity_detects_a_wrong_exponent() {
        // Summing alpha = 1.5 pieces but scaling as if alpha were 1.2.
        let alpha = 1.5;
        let direct: Vec<f64> = stable_draws(alpha, 20_000, 1, 1).into_iter().map(|x| x * 2f64.powf(1.0 / 1.2)).collect();
        let parts = stable_draws(alpha, 20_000 * 16, 1, 2);
        let summed: Vec<f64> = parts.chunks(16).map(|c| c.iter().sum::<f64>() * (2.0f64 / 16.0).powf(1.0 / alpha)).collect();
        assert!(ks_statistic(&direct, &summed) > ks_critical_value(20_000, 20_000, 0.01));
    }

    #[test]
    fn backends_agree_when_cutoff_is_small() {
        let r = backend_agreement(0.8, 0.1, 1e-3, &[0.5, 1.0, 2.0, 4.0], 100_000, 3).unwrap();
        assert!(r.passed(4.0), "{r:?}");
        for p in &r.points {
            assert!(p.exact.z_score(p.theoretical, 0.0) < 4.0);
        }
    }

    #[test]
    fn arguments_are_checked() {
        assert!(sampler_check(2.0, 10_000, 1000, 1).is_err());
        assert!(sampler_check(1.0, 10, 1000, 1).is_err());
    }
}
