use super::DiagnosticsError;
use crate::solver::{EnsembleResult, HorizonStats};
use crate::stats::{mean_estimate, MeanEstimate};

const MIN_TRAJECTORIES: usize = 16;
const UNRELIABLE_FRACTION: f64 = 0.01;

/// Least-squares line through `(t_k, mean_k)` with the worst residual in
/// units of the per-point standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFit {
    pub intercept: f64,
    pub slope: f64,
    pub max_residual_z: f64,
}

impl AffineFit {
    pub fn fit(ts: &[f64], ys: &[MeanEstimate]) -> Self {
        let n = ts.len() as f64;
        let (mt, my) = (ts.iter().sum::<f64>() / n, ys.iter().map(|y| y.mean).sum::<f64>() / n);
        let sxx: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
        let sxy: f64 = ts.iter().zip(ys).map(|(t, y)| (t - mt) * (y.mean - my)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let intercept = my - slope * mt;
        let max_residual_z = ts
            .iter()
            .zip(ys)
            .map(|(t, y)| {
                let r = (y.mean - intercept - slope * t).abs();
                if r <= 1e-12 * (1.0 + y.mean.abs()) {
                    0.0
                } else if y.std_error > 0.0 {
                    r / y.std_error
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max);
        Self { intercept, slope, max_residual_z }
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.max_residual_z <= sigmas
    }
}

/// Two estimates agreeing within `sigmas` combined standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityCheck {
    pub reference: MeanEstimate,
    pub candidate: MeanEstimate,
    pub tolerance: f64,
    pub passed: bool,
}

impl StabilityCheck {
    pub fn new(reference: MeanEstimate, candidate: MeanEstimate, sigmas: f64) -> Self {
        let tolerance = sigmas * reference.std_error.hypot(candidate.std_error);
        let passed = (candidate.mean - reference.mean).abs() <= tolerance.max(1e-12 * reference.mean.abs());
        Self { reference, candidate, tolerance, passed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub theta: f64,
    /// `||phi||_0^theta`.
    pub initial_norm_theta: f64,
    pub horizons: Vec<f64>,
    /// `E sup_{s<=t} ||u_s||^theta`.
    pub sup_term: Vec<MeanEstimate>,
    /// `E int_0^t ||grad u||^2 / (||u||^2 + 1)^{1-theta/2} ds`.
    pub integral_term: Vec<MeanEstimate>,
    /// Sum of both terms, estimated per trajectory.
    pub lhs: Vec<MeanEstimate>,
    /// `lhs / (1 + ||phi||^theta + t)`.
    pub ratios: Vec<MeanEstimate>,
    /// Running maximum of `ratios`: the envelope constant up to each horizon.
    pub envelope: Vec<MeanEstimate>,
    pub fit: AffineFit,
    pub trajectories: usize,
    pub flagged: usize,
    pub unreliable: bool,
}

impl MomentReport {
    /// The envelope constant over all horizons.
    pub fn constant(&self) -> MeanEstimate {
        *self.envelope.last().expect("at least one horizon")
    }

    /// Envelope stability between consecutive horizons from `from` on.
    pub fn horizon_doubling_checks(&self, from: f64, sigmas: f64) -> Vec<StabilityCheck> {
        let idx: Vec<usize> = (0..self.horizons.len()).filter(|&k| self.horizons[k] >= from).collect();
        idx.windows(2).map(|w| StabilityCheck::new(self.envelope[w[0]], self.envelope[w[1]], sigmas)).collect()
    }

    /// Envelope stability against a report built from a larger ensemble.
    pub fn ensemble_doubling_check(&self, larger: &MomentReport, sigmas: f64) -> StabilityCheck {
        StabilityCheck::new(self.constant(), larger.constant(), sigmas)
    }
}

fn check_ensemble(ensemble: &EnsembleResult) -> Result<usize, DiagnosticsError> {
    let found = ensemble.completed().count();
    if ensemble.summaries.len() < MIN_TRAJECTORIES || found == 0 {
        return Err(DiagnosticsError::TooFewTrajectories { required: MIN_TRAJECTORIES, found });
    }
    Ok(found)
}

/// Ensemble estimate of both terms of the fractional moment bound at each
/// horizon and the empirical envelope constant.
pub fn moment_bound_report(
    ensemble: &EnsembleResult,
    theta: f64,
    initial_norm: f64,
) -> Result<MomentReport, DiagnosticsError> {
    let trajectories = check_ensemble(ensemble)?;
    let initial_norm_theta = if initial_norm == 0.0 { 0.0 } else { initial_norm.powf(theta) };
    let column = |h: usize, f: &dyn Fn(&HorizonStats) -> f64| mean_estimate(&ensemble.column(h, f));
    let mut report = MomentReport {
        theta,
        initial_norm_theta,
        horizons: ensemble.horizons.clone(),
        sup_term: Vec::new(),
        integral_term: Vec::new(),
        lhs: Vec::new(),
        ratios: Vec::new(),
        envelope: Vec::new(),
        fit: AffineFit { intercept: 0.0, slope: 0.0, max_residual_z: 0.0 },
        trajectories,
        flagged: ensemble.flagged(),
        unreliable: ensemble.flagged_fraction() > UNRELIABLE_FRACTION,
    };
    let mut best: Option<MeanEstimate> = None;
    for (h, &t) in ensemble.horizons.iter().enumerate() {
        let denom = 1.0 + initial_norm_theta + t;
        report.sup_term.push(column(h, &|s| s.sup_norm_theta));
        report.integral_term.push(column(h, &|s| s.weighted_enstrophy));
        report.lhs.push(column(h, &|s| s.sup_norm_theta + s.weighted_enstrophy));
        let ratio = column(h, &|s| (s.sup_norm_theta + s.weighted_enstrophy) / denom);
        report.ratios.push(ratio);
        if best.is_none_or(|b| ratio.mean > b.mean) {
            best = Some(ratio);
        }
        report.envelope.push(best.unwrap());
    }
    report.fit = AffineFit::fit(&report.horizons, &report.lhs);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientMomentReport {
    pub theta: f64,
    pub horizons: Vec<f64>,
    /// `E int_0^t ||grad u||^theta ds`.
    pub estimates: Vec<MeanEstimate>,
    /// `1 + lambda_1^{-(2-theta)/2}`, the factor turning the weighted
    /// enstrophy into a bound on the gradient moment.
    pub poincare_factor: f64,
    /// `C' = poincare_factor * C + 1` from the measured envelope constant.
    pub constant: f64,
    /// `C' (1 + ||phi||^theta + t)` per horizon.
    pub bounds: Vec<f64>,
    /// Trajectories violating `int ||grad u||^theta <= factor * I(t) + t`.
    pub pathwise_violations: usize,
    /// Affine fit over horizons `>= affine_from`.
    pub fit: AffineFit,
    pub affine_from: f64,
}

impl GradientMomentReport {
    pub fn within_bounds(&self) -> bool {
        self.estimates.iter().zip(&self.bounds).all(|(e, b)| e.mean <= *b)
    }
}

/// `E int_0^t ||grad u||^theta ds` at each horizon, checked against the
/// constant implied by the moment bound through the Poincaré inequality.
pub fn gradient_moment_report(
    ensemble: &EnsembleResult,
    moments: &MomentReport,
    lambda_1: f64,
    affine_from: f64,
) -> Result<GradientMomentReport, DiagnosticsError> {
    check_ensemble(ensemble)?;
    let theta = moments.theta;
    let poincare_factor = 1.0 + lambda_1.powf(-(2.0 - theta) / 2.0);
    let constant = poincare_factor * moments.constant().mean + 1.0;
    let mut estimates = Vec::new();
    let mut bounds = Vec::new();
    let mut pathwise_violations = 0;
    for (h, &t) in ensemble.horizons.iter().enumerate() {
        estimates.push(mean_estimate(&ensemble.column(h, |s| s.gradient_moment)));
        bounds.push(constant * (1.0 + moments.initial_norm_theta + t));
        pathwise_violations += ensemble
            .completed()
            .filter(|s| {
                let s = &s.horizons[h];
                let bound = poincare_factor * s.weighted_enstrophy + t;
                s.gradient_moment > bound * (1.0 + 1e-12) + 1e-300
            })
            .count();
    }
    let idx: Vec<usize> = (0..ensemble.horizons.len()).filter(|&k| ensemble.horizons[k] >= affine_from).collect();
    let ts: Vec<f64> = idx.iter().map(|&k| ensemble.horizons[k]).collect();
    let ys: Vec<MeanEstimate> = idx.iter().map(|&k| estimates[k]).collect();
    let fit = if ts.len() >= 2 { AffineFit::fit(&ts, &ys) } else { AffineFit { intercept: 0.0, slope: 0.0, max_residual_z: 0.0 } };
    Ok(GradientMomentReport {
        theta,
        horizons: ensemble.horizons.clone(),
        estimates,
        poincare_factor,
        constant,
        bounds,
        pathwise_violations,
        fit,
        affine_from,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{CoefficientSequence, LevyMeasureSpec, LevyNoiseSpec, NoiseBackend};
    use crate::solver::{simulate_ensemble, InitialCondition, SolverConfig};
    use crate::spectral::{Phase, WaveVector};
    use std::f64::consts::PI;

    fn shear(amplitude: f64) -> InitialCondition {
        InitialCondition::SingleMode { wave: WaveVector { kx: 1, ky: 0 }, phase: Phase::Cosine, amplitude }
    }

    #[test]
    fn noise_off_zero_start() {
        let cfg = SolverConfig::deterministic(8, 1e-2, 1.0, InitialCondition::Zero);
        let ens = simulate_ensemble(&cfg, 16, 0, &[0.5, 1.0]).unwrap();
        let r = moment_bound_report(&ens, 1.0, 0.0).unwrap();
        for k in 0..2 {
            assert_eq!(r.sup_term[k].mean, 0.0);
            assert_eq!(r.integral_term[k].mean, 0.0);
        }
        assert_eq!(r.constant().mean, 0.0);
        let g = gradient_moment_report(&ens, &r, 4.0 * PI * PI, 0.0).unwrap();
        assert!(g.estimates.iter().all(|e| e.mean == 0.0));
        assert!(!r.unreliable);
    }

    #[test]
    fn noise_off_decay_from_data() {
        // Energy identity: the weighted enstrophy integral equals
        // (f(phi) - f(u_t)) / theta, so lhs <= ||phi||^theta + (f(phi) - 1) / theta.
        for (amp, theta) in [(1.0, 1.0), (0.5, 0.5), (3.0, 0.8)] {
            let cfg = SolverConfig { theta, ..SolverConfig::deterministic(8, 1e-3, 1.0, shear(amp)) };
            let ens = simulate_ensemble(&cfg, 16, 0, &[0.25, 1.0]).unwrap();
            let r = moment_bound_report(&ens, theta, amp).unwrap();
            let f_phi = (amp * amp + 1.0f64).powf(theta / 2.0);
            for k in 0..2 {
                assert!((r.sup_term[k].mean - amp.powf(theta)).abs() < 1e-15);
                let t = r.horizons[k];
                let f_t = ((amp * (-4.0 * PI * PI * t).exp()).powi(2) + 1.0).powf(theta / 2.0);
                let exact = (f_phi - f_t) / theta;
                assert!((r.integral_term[k].mean - exact).abs() < 1e-3 * exact, "{amp} {theta}");
            }
            if amp <= 1.0 {
                assert!(r.constant().mean <= 1.0);
            }
        }
    }

    #[test]
    fn closed_form_gradient_moment_of_a_decaying_mode() {
        let (amp, theta) = (2.0, 0.6);
        let lambda = 4.0 * PI * PI;
        let cfg = SolverConfig { theta, ..SolverConfig::deterministic(8, 1e-4, 1.0, shear(amp)) };
        let ens = simulate_ensemble(&cfg, 16, 0, &[1.0]).unwrap();
        let r = moment_bound_report(&ens, theta, amp).unwrap();
        let g = gradient_moment_report(&ens, &r, lambda, 0.0).unwrap();
        // int_0^inf (sqrt(lambda) a e^{-lambda s})^theta ds
        let exact = lambda.powf(theta / 2.0) * amp.powf(theta) / (theta * lambda);
        assert!((g.estimates[0].mean - exact).abs() < 1e-4 * exact);
        assert_eq!(g.pathwise_violations, 0);
        assert!(g.within_bounds());
    }

    #[test]
    fn driven_ensemble_report_shapes() {
        let noise = LevyNoiseSpec::new(
            LevyMeasureSpec::stable(1.5, 1.0).unwrap(),
            CoefficientSequence::Power(2.0),
            1.0,
            NoiseBackend::Exact,
        )
        .unwrap();
        let cfg = SolverConfig { seed: 17, ..SolverConfig::deterministic(16, 1e-3, 1.0, shear(1.0)) }.with_noise(noise);
        let ens = simulate_ensemble(&cfg, 32, 0, &[0.25, 0.5, 1.0]).unwrap();
        let r = moment_bound_report(&ens, 1.0, 1.0).unwrap();
        for w in r.envelope.windows(2) {
            assert!(w[1].mean >= w[0].mean);
        }
        for k in 0..3 {
            assert!(r.sup_term[k].mean >= 1.0);
            assert!(r.lhs[k].mean.is_finite());
        }
        let g = gradient_moment_report(&ens, &r, 4.0 * PI * PI, 0.0).unwrap();
        assert_eq!(g.pathwise_violations, 0);
        assert!(g.within_bounds());
        assert_eq!(r.horizon_doubling_checks(0.5, 2.0).len(), 1);
        let small = simulate_ensemble(&cfg, 8, 0, &[1.0]).unwrap();
        assert!(matches!(moment_bound_report(&small, 1.0, 1.0), Err(DiagnosticsError::TooFewTrajectories { .. })));
    }

    #[test]
    fn affine_fit_recovers_line() {
        let ys: Vec<MeanEstimate> =
            [1.0, 2.0, 4.0, 8.0].iter().map(|t| MeanEstimate { mean: 3.0 + 0.5 * t, std_error: 0.1, count: 10 }).collect();
        let fit = AffineFit::fit(&[1.0, 2.0, 4.0, 8.0], &ys);
        assert!((fit.slope - 0.5).abs() < 1e-12 && (fit.intercept - 3.0).abs() < 1e-12);
        assert!(fit.within(1e-6));
    }
}
