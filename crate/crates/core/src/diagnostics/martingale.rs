use num_complex::Complex64;

use super::DiagnosticsError;
use crate::levy::BigJump;
use crate::solver::{map_trajectories, run_trajectory, RunContext, SolverConfig, SolverError, StepObserver};
use crate::stats::{empirical_cf_of, EmpiricalCf};

/// Values of the martingale part
/// `M_t = a_j(t) - a_j(0) + int_0^t [lambda_j a_j + B_j(u)] ds`
/// of selected modes at selected times, one row per completed trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleSamples {
    pub modes: Vec<usize>,
    pub times: Vec<f64>,
    /// `values[trajectory][mode][time]`.
    pub values: Vec<Vec<Vec<f64>>>,
    pub flagged: usize,
}

impl MartingaleSamples {
    fn series(&self, mode: usize, time: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(move |v| v[mode][time])
    }

    fn time_index(&self, t: f64) -> usize {
        self.times.iter().position(|&x| x == t).expect("requested time was collected")
    }
}

struct MartingaleObserver<'a> {
    ctx: &'a RunContext,
    modes: &'a [usize],
    steps: &'a [usize],
    start: Vec<f64>,
    integral: Vec<f64>,
    previous: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl MartingaleObserver<'_> {
    fn drift(&self, j: usize, u: &[f64]) -> f64 {
        self.ctx.lambdas[j - 1] * u[j - 1] + self.ctx.basis.triads().component(u, j - 1)
    }

    fn record(&mut self, k: usize, u: &[f64]) {
        for (ti, &s) in self.steps.iter().enumerate() {
            if s == k {
                for (mi, &j) in self.modes.iter().enumerate() {
                    self.values[mi][ti] = u[j - 1] - self.start[mi] + self.integral[mi];
                }
            }
        }
    }
}

impl StepObserver for MartingaleObserver<'_> {
    fn start(&mut self, u: &[f64]) {
        self.start = self.modes.iter().map(|&j| u[j - 1]).collect();
        self.previous = self.modes.iter().map(|&j| self.drift(j, u)).collect();
        self.record(0, u);
    }

    fn step(&mut self, k: usize, left: &[f64], u: &[f64], _big_jumps: &[BigJump]) {
        let dt = self.ctx.config.dt;
        for mi in 0..self.modes.len() {
            let j = self.modes[mi];
            self.integral[mi] += 0.5 * dt * (self.previous[mi] + self.drift(j, left));
            self.previous[mi] = self.drift(j, u);
        }
        self.record(k, u);
    }
}

/// Reconstructs the martingale parts of `modes` at `times` over `m` trajectories.
pub fn martingale_samples(
    config: &SolverConfig,
    modes: &[usize],
    times: &[f64],
    m: usize,
    workers: usize,
) -> Result<MartingaleSamples, DiagnosticsError> {
    if let Some(&j) = modes.iter().find(|&&j| j == 0 || j > config.n) {
        return Err(DiagnosticsError::InvalidArgument(format!("mode {j} is outside 1..={}", config.n)));
    }
    let mut times = times.to_vec();
    times.sort_by(f64::total_cmp);
    times.dedup();
    if let Some(&t) = times.iter().find(|&&t| t < 0.0 || config.step_of(t) > config.steps()) {
        return Err(DiagnosticsError::InvalidArgument(format!("time {t} lies outside [0, {}]", config.horizon)));
    }
    let steps: Vec<usize> = times.iter().map(|&t| config.step_of(t)).collect();
    let ctx = RunContext::new(config)?;
    let rows = map_trajectories(m, workers, |traj| {
        let mut obs = MartingaleObserver {
            ctx: &ctx,
            modes,
            steps: &steps,
            start: Vec::new(),
            integral: vec![0.0; modes.len()],
            previous: Vec::new(),
            values: vec![vec![0.0; steps.len()]; modes.len()],
        };
        match run_trajectory(&ctx, traj, &mut obs) {
            Ok(()) => Ok(Some(obs.values)),
            Err(SolverError::BlowUp { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let mut values = Vec::with_capacity(m);
    let mut flagged = 0;
    for r in rows {
        match r? {
            Some(v) => values.push(v),
            None => flagged += 1,
        }
    }
    Ok(MartingaleSamples { modes: modes.to_vec(), times, values, flagged })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharFunPoint {
    pub s: f64,
    pub t: f64,
    pub xi: f64,
    pub empirical: EmpiricalCf,
    pub theoretical: Complex64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharFunReport {
    pub mode: usize,
    pub dt: f64,
    pub trajectories: usize,
    pub flagged: usize,
    pub points: Vec<CharFunPoint>,
}

impl CharFunReport {
    pub fn pass_fraction(&self) -> f64 {
        let ok = self.points.iter().filter(|p| p.z < 3.0).count();
        ok as f64 / self.points.len().max(1) as f64
    }

    /// At least 95% of grid points within three standard errors.
    pub fn passed(&self) -> bool {
        self.pass_fraction() >= 0.95
    }
}

/// Empirical characteristic function of `M^(j)_t - M^(j)_s` against
/// `exp((t - s) psi(beta_j xi))` over `xi_grid` and `pairs`.
pub fn martingale_cf_test(
    config: &SolverConfig,
    mode: usize,
    xi_grid: &[f64],
    pairs: &[(f64, f64)],
    m: usize,
    workers: usize,
) -> Result<CharFunReport, DiagnosticsError> {
    let noise = config
        .noise
        .as_ref()
        .ok_or_else(|| DiagnosticsError::InvalidArgument("the characteristic function test needs noise".into()))?;
    if m < 1000 {
        return Err(DiagnosticsError::TooFewTrajectories { required: 1000, found: m });
    }
    if let Some(&(s, t)) = pairs.iter().find(|(s, t)| s > t) {
        return Err(DiagnosticsError::InvalidArgument(format!("time pair ({s}, {t}) is reversed")));
    }
    let times: Vec<f64> = pairs.iter().flat_map(|&(s, t)| [s, t]).collect();
    let samples = martingale_samples(config, &[mode], &times, m, workers)?;
    let beta = noise.betas.beta(mode);
    let mut points = Vec::new();
    for &(s, t) in pairs {
        let (si, ti) = (samples.time_index(s), samples.time_index(t));
        for &xi in xi_grid {
            let empirical = empirical_cf_of(samples.series(0, ti).zip(samples.series(0, si)).map(|(b, a)| xi * (b - a)));
            let theoretical = ((t - s) * noise.measure.symbol(beta * xi).map_err(crate::levy::LevyError::from)?).exp();
            let z = empirical.z_score(theoretical, 0.0);
            points.push(CharFunPoint { s, t, xi, empirical, theoretical, z });
        }
    }
    Ok(CharFunReport { mode, dt: config.dt, trajectories: samples.values.len(), flagged: samples.flagged, points })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfVerdict {
    Pass,
    /// The two step sizes disagree: the drift quadrature dominates.
    QuadratureDominated,
    /// Both step sizes agree with each other but not with the theory.
    LawMismatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalvingReport {
    pub coarse: CharFunReport,
    pub fine: CharFunReport,
    /// Largest z-score between the two empirical characteristic functions.
    pub max_disagreement_z: f64,
    pub verdict: CfVerdict,
}

/// Runs [`martingale_cf_test`] at `dt` and `dt / 2` and separates
/// quadrature bias from a genuine law mismatch.
pub fn martingale_cf_with_halving(
    config: &SolverConfig,
    mode: usize,
    xi_grid: &[f64],
    pairs: &[(f64, f64)],
    m: usize,
    workers: usize,
) -> Result<HalvingReport, DiagnosticsError> {
    let coarse = martingale_cf_test(config, mode, xi_grid, pairs, m, workers)?;
    let fine_cfg = SolverConfig { dt: config.dt / 2.0, ..config.clone() };
    let fine = martingale_cf_test(&fine_cfg, mode, xi_grid, pairs, m, workers)?;
    let max_disagreement_z = coarse
        .points
        .iter()
        .zip(&fine.points)
        .map(|(a, b)| {
            let d = a.empirical.value - b.empirical.value;
            let z = |d: f64, s1: f64, s2: f64| {
                let s = s1.hypot(s2);
                if d == 0.0 {
                    0.0
                } else {
                    d.abs() / s
                }
            };
            z(d.re, a.empirical.se_re, b.empirical.se_re).max(z(d.im, a.empirical.se_im, b.empirical.se_im))
        })
        .fold(0.0, f64::max);
    let verdict = if coarse.passed() && fine.passed() && max_disagreement_z < 3.0 {
        CfVerdict::Pass
    } else if max_disagreement_z >= 3.0 {
        CfVerdict::QuadratureDominated
    } else {
        CfVerdict::LawMismatch
    };
    Ok(HalvingReport { coarse, fine, max_disagreement_z, verdict })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndependencePoint {
    pub xi: f64,
    pub eta: f64,
    pub joint: Complex64,
    pub product: Complex64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceReport {
    pub modes: (usize, usize),
    pub t: f64,
    pub trajectories: usize,
    pub flagged: usize,
    pub points: Vec<IndependencePoint>,
}

impl IndependenceReport {
    pub fn passed(&self) -> bool {
        self.points.iter().all(|p| p.z < 3.0)
    }
}

/// Joint characteristic function of `(M^(j)_t, M^(k)_t)` against the
/// product of the empirical marginals on the grid `xi_grid x xi_grid`.
pub fn independence_test(
    config: &SolverConfig,
    modes: (usize, usize),
    t: f64,
    xi_grid: &[f64],
    m: usize,
    workers: usize,
) -> Result<IndependenceReport, DiagnosticsError> {
    if modes.0 == modes.1 {
        return Err(DiagnosticsError::InvalidArgument("independence needs two distinct modes".into()));
    }
    if m < 1000 {
        return Err(DiagnosticsError::TooFewTrajectories { required: 1000, found: m });
    }
    let samples = martingale_samples(config, &[modes.0, modes.1], &[t], m, workers)?;
    let x: Vec<f64> = samples.series(0, 0).collect();
    let y: Vec<f64> = samples.series(1, 0).collect();
    let mut points = Vec::new();
    for &xi in xi_grid {
        for &eta in xi_grid {
            let joint = empirical_cf_of(x.iter().zip(&y).map(|(a, b)| xi * a + eta * b));
            let fx = empirical_cf_of(x.iter().map(|a| xi * a));
            let fy = empirical_cf_of(y.iter().map(|b| eta * b));
            let product = fx.value * fy.value;
            // Delta-method standard error of joint - product.
            let se = |sj: f64, sx: f64, sy: f64| {
                (sj * sj + (fy.value.norm() * sx).powi(2) + (fx.value.norm() * sy).powi(2)).sqrt()
            };
            let d = joint.value - product;
            let z1 = |d: f64, s: f64| if d == 0.0 { 0.0 } else { d.abs() / s };
            let z = z1(d.re, se(joint.se_re, fx.se_re.hypot(fx.se_im), fy.se_re.hypot(fy.se_im)))
                .max(z1(d.im, se(joint.se_im, fx.se_re.hypot(fx.se_im), fy.se_re.hypot(fy.se_im))));
            points.push(IndependencePoint { xi, eta, joint: joint.value, product, z });
        }
    }
    Ok(IndependenceReport { modes, t, trajectories: samples.values.len(), flagged: samples.flagged, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{CoefficientSequence, LevyMeasureSpec, LevyNoiseSpec, NoiseBackend};
    use crate::solver::InitialCondition;

    fn config(betas: CoefficientSequence, n: usize) -> SolverConfig {
        let noise =
            LevyNoiseSpec::new(LevyMeasureSpec::stable(1.5, 1.0).unwrap(), betas, 1.0, NoiseBackend::Exact).unwrap();
        SolverConfig { seed: 21, ..SolverConfig::deterministic(n, 2e-3, 0.5, InitialCondition::Zero) }.with_noise(noise)
    }

    #[test]
    fn zero_frequency_is_exact() {
        let r = martingale_cf_test(&config(CoefficientSequence::Power(2.0), 8), 1, &[0.0], &[(0.0, 0.5)], 1000, 0).unwrap();
        assert_eq!(r.points[0].empirical.value, Complex64::new(1.0, 0.0));
        assert_eq!(r.points[0].theoretical, Complex64::new(1.0, 0.0));
        assert!(r.passed());
    }

    #[test]
    fn unforced_mode_has_trivial_martingale() {
        // Only the (0,1) sine mode is forced; shear flows along one wave
        // vector have no nonlinear interaction, so mode 1 never moves.
        let mut betas = vec![0.0; 8];
        betas[1] = 1.0;
        let r = martingale_cf_test(&config(CoefficientSequence::Explicit(betas), 8), 1, &[1.0, 2.0], &[(0.0, 0.5)], 1000, 0)
            .unwrap();
        for p in &r.points {
            assert!((p.empirical.value - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            assert_eq!(p.theoretical, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn martingale_law_matches_symbol() {
        let r = martingale_cf_test(
            &config(CoefficientSequence::Power(2.0), 8),
            1,
            &[0.5, 1.0, 2.0],
            &[(0.0, 0.5), (0.25, 0.5)],
            4000,
            0,
        )
        .unwrap();
        assert!(r.passed(), "{r:?}");
        for p in &r.points {
            assert!(p.empirical.value.norm() <= 1.0 + 1e-12);
            assert!(p.theoretical.norm() <= 1.0);
        }
    }

    #[test]
    fn independence_of_two_modes() {
        let r = independence_test(&config(CoefficientSequence::Power(2.0), 8), (1, 2), 0.5, &[0.0, 1.0, 2.0], 4000, 0)
            .unwrap();
        assert!(r.passed(), "{r:?}");
        let origin = r.points.iter().find(|p| p.xi == 0.0 && p.eta == 0.0).unwrap();
        assert_eq!(origin.joint, Complex64::new(1.0, 0.0));
        assert_eq!(origin.z, 0.0);
    }

    #[test]
    fn argument_checks() {
        let c = config(CoefficientSequence::Power(2.0), 8);
        assert!(martingale_cf_test(&c, 1, &[1.0], &[(0.0, 0.5)], 10, 0).is_err());
        assert!(martingale_cf_test(&c, 9, &[1.0], &[(0.0, 0.5)], 1000, 0).is_err());
        assert!(martingale_cf_test(&c, 1, &[1.0], &[(0.5, 0.0)], 1000, 0).is_err());
        assert!(martingale_cf_test(&c, 1, &[1.0], &[(0.0, 1.0)], 1000, 0).is_err());
        assert!(independence_test(&c, (1, 1), 0.5, &[1.0], 1000, 0).is_err());
    }
}
