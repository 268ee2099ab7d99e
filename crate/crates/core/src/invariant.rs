//! Krylov-Bogoliubov style time-averaged empirical measures of scalar
//! observables, with window-stationarity and initial-condition diagnostics.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::levy::BigJump;
use crate::rng;
use crate::solver::{map_trajectories, run_trajectory, RunContext, SolverConfig, SolverError, StepObserver};
use crate::stats::{autocorrelation, ks_statistic, mean_estimate, quantile, MeanEstimate};

pub const HISTOGRAM_BINS: usize = 64;
const MIN_SAMPLES: usize = 100;
const INITIAL_STRIDE: usize = 10;
const TARGET_AUTOCORRELATION: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvariantError {
    #[error("invalid observable '{0}'")]
    UnknownObservable(String),
    #[error("invalid estimator setting: {0}")]
    InvalidSetting(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Scalar functional of the velocity field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observable {
    L2Norm,
    /// `||grad u||_0^theta`.
    H1NormTheta,
    /// Coefficient of the 1-based mode `j`.
    ModeCoeff(usize),
    FTheta,
    /// `sum_{j=m1}^{m2} a_j^2`.
    EnergyBand(usize, usize),
}

impl Observable {
    pub fn evaluate(&self, u: &[f64], lambdas: &[f64], theta: f64) -> f64 {
        match *self {
            Observable::L2Norm => u.iter().map(|a| a * a).sum::<f64>().sqrt(),
            Observable::H1NormTheta => {
                let h1 = u.iter().zip(lambdas).map(|(a, l)| l * a * a).sum::<f64>().sqrt();
                if h1 == 0.0 {
                    0.0
                } else {
                    h1.powf(theta)
                }
            }
            Observable::ModeCoeff(j) => u[j - 1],
            Observable::FTheta => (u.iter().map(|a| a * a).sum::<f64>() + 1.0).powf(theta / 2.0),
            Observable::EnergyBand(a, b) => u[a - 1..b].iter().map(|x| x * x).sum(),
        }
    }

    /// Whether the observable takes negative values.
    pub fn signed(&self) -> bool {
        matches!(self, Observable::ModeCoeff(_))
    }

    fn check(&self, n: usize) -> Result<(), InvariantError> {
        let ok = match *self {
            Observable::ModeCoeff(j) => (1..=n).contains(&j),
            Observable::EnergyBand(a, b) => a >= 1 && a <= b && b <= n,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(InvariantError::InvalidSetting(format!("observable {self} does not fit n={n}")))
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::L2Norm => write!(f, "l2"),
            Observable::H1NormTheta => write!(f, "h1theta"),
            Observable::ModeCoeff(j) => write!(f, "mode:{j}"),
            Observable::FTheta => write!(f, "ftheta"),
            Observable::EnergyBand(a, b) => write!(f, "band:{a}:{b}"),
        }
    }
}

impl FromStr for Observable {
    type Err = InvariantError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || InvariantError::UnknownObservable(s.to_string());
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| p.parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["l2"] | ["l2_norm"] => Ok(Observable::L2Norm),
            ["h1theta"] | ["h1_norm_theta"] => Ok(Observable::H1NormTheta),
            ["ftheta"] | ["f_theta"] => Ok(Observable::FTheta),
            ["mode", j] => Ok(Observable::ModeCoeff(num(j)?)),
            ["band", a, b] => Ok(Observable::EnergyBand(num(a)?, num(b)?)),
            _ => Err(bad()),
        }
    }
}

/// Fixed-edge histogram with an overflow bin, plus an underflow bin for
/// signed observables. Masses sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `HISTOGRAM_BINS + 1` edges.
    pub edges: Vec<f64>,
    pub mass: Vec<f64>,
    pub underflow: Option<f64>,
    pub overflow: f64,
}

impl Histogram {
    /// Edges over `[0, q99.5]`, or `[q0.5, q99.5]` when `signed`, of a pilot sample.
    pub fn edges_from_pilot(pilot: &[f64], signed: bool) -> Vec<f64> {
        let lo = if signed { quantile(pilot, 0.005) } else { 0.0 };
        let mut hi = quantile(pilot, 0.995);
        if !(hi > lo) {
            hi = lo + 1.0;
        }
        let w = (hi - lo) / HISTOGRAM_BINS as f64;
        let mut edges: Vec<f64> = (0..=HISTOGRAM_BINS).map(|i| lo + w * i as f64).collect();
        edges[HISTOGRAM_BINS] = hi;
        edges
    }

    pub fn build(edges: &[f64], samples: &[f64], signed: bool) -> Self {
        let bins = edges.len() - 1;
        let (lo, hi) = (edges[0], edges[bins]);
        let mut counts = vec![0usize; bins];
        let (mut under, mut over) = (0usize, 0usize);
        for &x in samples {
            if x < lo {
                under += 1;
            } else if x > hi {
                over += 1;
            } else {
                let i = edges.partition_point(|&e| e <= x).saturating_sub(1).min(bins - 1);
                counts[i] += 1;
            }
        }
        let total = samples.len().max(1) as f64;
        Self {
            edges: edges.to_vec(),
            mass: counts.iter().map(|&c| c as f64 / total).collect(),
            underflow: if signed || under > 0 { Some(under as f64 / total) } else { None },
            overflow: over as f64 / total,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum::<f64>() + self.underflow.unwrap_or(0.0) + self.overflow
    }

    /// `(lo, hi, mass)` rows including the outlier bins (with infinite ends).
    pub fn rows(&self) -> Vec<(f64, f64, f64)> {
        let mut rows = Vec::with_capacity(self.mass.len() + 2);
        if let Some(u) = self.underflow {
            rows.push((f64::NEG_INFINITY, self.edges[0], u));
        }
        for (i, &m) in self.mass.iter().enumerate() {
            rows.push((self.edges[i], self.edges[i + 1], m));
        }
        rows.push((*self.edges.last().unwrap(), f64::INFINITY, self.overflow));
        rows
    }
}

/// Settings of the time-averaged estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct KbSettings {
    pub observables: Vec<Observable>,
    pub burn_in: f64,
    /// Sampling stride in steps; `None` chooses it from a pilot trajectory.
    pub stride: Option<usize>,
    /// Sampling windows `[start, end)`; empty means `[burn_in, T)`.
    pub windows: Vec<(f64, f64)>,
}

impl KbSettings {
    pub fn new(observables: Vec<Observable>, burn_in: f64) -> Self {
        Self { observables, burn_in, stride: None, windows: Vec::new() }
    }
}

/// Time-and-ensemble averaged occupation measure of each observable over one window.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    pub observables: Vec<Observable>,
    pub window: (f64, f64),
    pub burn_in: f64,
    pub stride: usize,
    /// The stride came from the autocorrelation heuristic.
    pub stride_is_heuristic: bool,
    pub trajectories: usize,
    pub flagged: usize,
    /// Samples per completed trajectory.
    pub per_trajectory: usize,
    /// `samples[observable]`, ordered by trajectory then time.
    pub samples: Vec<Vec<f64>>,
    pub histograms: Vec<Histogram>,
    pub underpowered: bool,
}

impl EmpiricalMeasure {
    pub fn sample_count(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    /// Mean with a standard error from per-trajectory averages.
    pub fn mean(&self, observable: usize) -> MeanEstimate {
        let xs = &self.samples[observable];
        if self.per_trajectory == 0 {
            return mean_estimate(&[]);
        }
        let per: Vec<f64> =
            xs.chunks(self.per_trajectory).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
        let mut est = mean_estimate(&per);
        est.count = xs.len();
        est
    }

    fn blocks(&self, observable: usize) -> Vec<&[f64]> {
        if self.per_trajectory == 0 {
            return Vec::new();
        }
        self.samples[observable].chunks(self.per_trajectory).collect()
    }
}

struct SampleObserver<'a> {
    ctx: &'a RunContext,
    observables: &'a [Observable],
    /// Sorted step indices to sample, with their window index.
    schedule: &'a [(usize, usize)],
    next: usize,
    /// `out[window][observable]`.
    out: Vec<Vec<Vec<f64>>>,
}

impl SampleObserver<'_> {
    fn sample(&mut self, k: usize, u: &[f64]) {
        while self.next < self.schedule.len() && self.schedule[self.next].0 == k {
            let w = self.schedule[self.next].1;
            for (i, o) in self.observables.iter().enumerate() {
                self.out[w][i].push(o.evaluate(u, &self.ctx.lambdas, self.ctx.config.theta));
            }
            self.next += 1;
        }
    }
}

impl StepObserver for SampleObserver<'_> {
    fn start(&mut self, u: &[f64]) {
        self.sample(0, u);
    }

    fn step(&mut self, k: usize, _left: &[f64], u: &[f64], _big_jumps: &[BigJump]) {
        self.sample(k, u);
    }
}

fn collect(
    ctx: &RunContext,
    trajectory: u64,
    observables: &[Observable],
    schedule: &[(usize, usize)],
    windows: usize,
) -> Result<Vec<Vec<Vec<f64>>>, SolverError> {
    let mut obs = SampleObserver {
        ctx,
        observables,
        schedule,
        next: 0,
        out: vec![vec![Vec::new(); observables.len()]; windows],
    };
    run_trajectory(ctx, trajectory, &mut obs)?;
    Ok(obs.out)
}

/// Doubles the stride from 10 steps until the lag-1 autocorrelation of the
/// subsampled `l2` series drops below 0.2, capped at `max_stride`.
pub fn adaptive_stride(series: &[f64], max_stride: usize) -> usize {
    let mut stride = INITIAL_STRIDE.min(max_stride.max(1));
    loop {
        let sub: Vec<f64> = series.iter().step_by(stride).copied().collect();
        let rho = autocorrelation(&sub, 1);
        if rho.is_nan() || rho < TARGET_AUTOCORRELATION || stride * 2 > max_stride {
            return stride;
        }
        stride *= 2;
    }
}

/// Empirical occupation measures of `settings.observables` over each window,
/// pooled across `m` trajectories. Bin edges and the adaptive stride come
/// from one pilot trajectory on its own stream.
pub fn kb_estimate(
    config: &SolverConfig,
    settings: &KbSettings,
    m: usize,
    workers: usize,
) -> Result<Vec<EmpiricalMeasure>, InvariantError> {
    let ctx = RunContext::new(config)?;
    if settings.observables.is_empty() {
        return Err(InvariantError::InvalidSetting("no observables requested".into()));
    }
    for o in &settings.observables {
        o.check(config.n)?;
    }
    if m == 0 {
        return Err(InvariantError::InvalidSetting("at least one trajectory is required".into()));
    }
    if !(settings.burn_in >= 0.0 && settings.burn_in < config.horizon) {
        return Err(InvariantError::InvalidSetting(format!(
            "burn-in {} must lie in [0, T={})",
            settings.burn_in, config.horizon
        )));
    }
    let windows = if settings.windows.is_empty() { vec![(settings.burn_in, config.horizon)] } else { settings.windows.clone() };
    for &(a, b) in &windows {
        if !(a >= settings.burn_in && a < b && b <= config.horizon + 1e-12) {
            return Err(InvariantError::InvalidSetting(format!(
                "window [{a}, {b}) must lie inside [burn-in={}, T={}]",
                settings.burn_in, config.horizon
            )));
        }
    }
    let burn = config.step_of(settings.burn_in);
    let steps = ctx.steps();

    // Pilot trajectory: every post-burn-in step.
    let all: Vec<(usize, usize)> = (burn..=steps).map(|k| (k, 0)).collect();
    let pilot = collect(&ctx, rng::PILOT_STREAM, &settings.observables, &all, 1).map_err(InvariantError::from)?;
    let pilot = &pilot[0];
    let shortest = windows.iter().map(|&(a, b)| config.step_of(b) - config.step_of(a)).min().unwrap_or(1);
    let (stride, heuristic) = match settings.stride {
        Some(0) => return Err(InvariantError::InvalidSetting("stride must be at least one step".into())),
        Some(s) => (s, false),
        None => {
            // Keep at least 100 samples per window across the ensemble.
            let cap = (shortest * m / MIN_SAMPLES).clamp(1, shortest.max(1));
            let l2 = match settings.observables.iter().position(|o| *o == Observable::L2Norm) {
                Some(p) => pilot[p].clone(),
                None => collect(&ctx, rng::PILOT_STREAM, &[Observable::L2Norm], &all, 1)?.remove(0).remove(0),
            };
            (adaptive_stride(&l2, cap), true)
        }
    };
    let edges: Vec<Vec<f64>> = settings
        .observables
        .iter()
        .enumerate()
        .map(|(i, o)| Histogram::edges_from_pilot(&pilot[i], o.signed()))
        .collect();

    let mut schedule: Vec<(usize, usize)> = Vec::new();
    for (w, &(a, b)) in windows.iter().enumerate() {
        let (ka, kb) = (config.step_of(a), config.step_of(b));
        let first = burn + (ka.saturating_sub(burn)).div_ceil(stride) * stride;
        schedule.extend((first..kb).step_by(stride).map(|k| (k, w)));
    }
    schedule.sort_unstable();

    let runs = map_trajectories(m, workers, |traj| collect(&ctx, traj, &settings.observables, &schedule, windows.len()));
    let mut flagged = 0;
    let mut per_window: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); settings.observables.len()]; windows.len()];
    let mut completed = 0;
    for r in runs {
        match r {
            Ok(out) => {
                completed += 1;
                for (w, obs) in out.into_iter().enumerate() {
                    for (i, xs) in obs.into_iter().enumerate() {
                        per_window[w][i].extend(xs);
                    }
                }
            }
            Err(SolverError::BlowUp { .. }) => flagged += 1,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(windows
        .iter()
        .zip(per_window)
        .map(|(&window, samples)| {
            let count = samples.first().map_or(0, Vec::len);
            let histograms = settings
                .observables
                .iter()
                .zip(&samples)
                .zip(&edges)
                .map(|((o, xs), e)| Histogram::build(e, xs, o.signed()))
                .collect();
            EmpiricalMeasure {
                observables: settings.observables.clone(),
                window,
                burn_in: settings.burn_in,
                stride,
                stride_is_heuristic: heuristic,
                trajectories: completed,
                flagged,
                per_trajectory: if completed > 0 { count / completed } else { 0 },
                samples,
                histograms,
                underpowered: count < MIN_SAMPLES,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowComparison {
    pub observable: Observable,
    pub distance: f64,
    pub p_value: f64,
    /// Not rejected at the 1% level.
    pub stationary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    pub windows: ((f64, f64), (f64, f64)),
    pub comparisons: Vec<WindowComparison>,
    pub underpowered: bool,
    pub permutations: usize,
}

impl StationarityReport {
    pub fn passed(&self) -> bool {
        !self.underpowered && self.comparisons.iter().all(|c| c.stationary)
    }
}

fn block_swap_test<R: Rng + ?Sized>(a: &[&[f64]], b: &[&[f64]], permutations: usize, rng: &mut R) -> (f64, f64) {
    let flat = |x: &[&[f64]]| x.iter().flat_map(|c| c.iter().copied()).collect::<Vec<f64>>();
    let observed = ks_statistic(&flat(a), &flat(b));
    if observed == 0.0 {
        return (0.0, 1.0);
    }
    let mut exceed = 0usize;
    let (mut xa, mut xb) = (Vec::new(), Vec::new());
    for _ in 0..permutations {
        xa.clear();
        xb.clear();
        for (ba, bb) in a.iter().zip(b) {
            let (p, q) = if rng.random::<bool>() { (bb, ba) } else { (ba, bb) };
            xa.extend_from_slice(p);
            xb.extend_from_slice(q);
        }
        if ks_statistic(&xa, &xb) >= observed - 1e-12 {
            exceed += 1;
        }
    }
    (observed, (1 + exceed) as f64 / (1 + permutations) as f64)
}

/// Two-sample KS distance per observable between two windows of the same
/// ensemble. The p-value comes from swapping each trajectory's two blocks
/// at random, which keeps the within-trajectory correlation intact.
pub fn window_stationarity_test(
    first: &EmpiricalMeasure,
    second: &EmpiricalMeasure,
    permutations: usize,
    seed: u64,
) -> Result<StationarityReport, InvariantError> {
    if first.observables != second.observables {
        return Err(InvariantError::InvalidSetting("windows carry different observables".into()));
    }
    let ((a0, a1), (b0, b1)) = (first.window, second.window);
    let identical = first.window == second.window;
    if !identical && a0 < b1 && b0 < a1 {
        return Err(InvariantError::InvalidSetting(format!("windows [{a0}, {a1}) and [{b0}, {b1}) overlap")));
    }
    if first.per_trajectory != second.per_trajectory || first.trajectories != second.trajectories {
        return Err(InvariantError::InvalidSetting("windows must hold the same number of samples per trajectory".into()));
    }
    let mut r = rng::stream(seed, rng::PILOT_STREAM, u64::MAX, 0);
    let comparisons = first
        .observables
        .iter()
        .enumerate()
        .map(|(i, &observable)| {
            let (distance, p_value) = block_swap_test(&first.blocks(i), &second.blocks(i), permutations, &mut r);
            WindowComparison { observable, distance, p_value, stationary: p_value >= 0.01 }
        })
        .collect();
    Ok(StationarityReport {
        windows: (first.window, second.window),
        comparisons,
        underpowered: first.underpowered || second.underpowered,
        permutations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub observables: Vec<Observable>,
    /// `(i, j, distances per observable)` for each pair of initial conditions.
    pub pairs: Vec<(usize, usize, Vec<f64>)>,
    /// Distances between two seeds of the first configuration: the Monte
    /// Carlo noise band.
    pub baseline: Vec<f64>,
}

/// KS distances between long-window measures started from different
/// initial conditions, reported next to a same-data, different-seed baseline.
pub fn initial_condition_sensitivity(
    configs: &[SolverConfig],
    settings: &KbSettings,
    m: usize,
    workers: usize,
) -> Result<SensitivityReport, InvariantError> {
    if configs.is_empty() {
        return Err(InvariantError::InvalidSetting("no configurations given".into()));
    }
    let window = |c: &SolverConfig| -> Result<EmpiricalMeasure, InvariantError> {
        let mut s = settings.clone();
        if s.windows.len() > 1 {
            s.windows.truncate(1);
        }
        Ok(kb_estimate(c, &s, m, workers)?.remove(0))
    };
    let measures = configs.iter().map(window).collect::<Result<Vec<_>, _>>()?;
    let dist = |a: &EmpiricalMeasure, b: &EmpiricalMeasure| -> Vec<f64> {
        (0..a.observables.len()).map(|i| ks_statistic(&a.samples[i], &b.samples[i])).collect()
    };
    let mut pairs = Vec::new();
    for i in 0..measures.len() {
        for j in i + 1..measures.len() {
            pairs.push((i, j, dist(&measures[i], &measures[j])));
        }
    }
    let reseeded = SolverConfig { seed: configs[0].seed.wrapping_add(1), ..configs[0].clone() };
    let baseline = dist(&measures[0], &window(&reseeded)?);
    Ok(SensitivityReport { observables: settings.observables.clone(), pairs, baseline })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{CoefficientSequence, LevyMeasureSpec, LevyNoiseSpec, NoiseBackend};
    use crate::solver::InitialCondition;
    use crate::spectral::{Phase, WaveVector};

    fn driven(seed: u64, t: f64, initial: InitialCondition) -> SolverConfig {
        let noise = LevyNoiseSpec::new(
            LevyMeasureSpec::stable(1.5, 1.0).unwrap(),
            CoefficientSequence::Power(2.0),
            1.0,
            NoiseBackend::Exact,
        )
        .unwrap();
        SolverConfig { seed, ..SolverConfig::deterministic(8, 2e-3, t, initial) }.with_noise(noise)
    }

    fn all_observables() -> Vec<Observable> {
        vec![
            Observable::L2Norm,
            Observable::H1NormTheta,
            Observable::ModeCoeff(1),
            Observable::FTheta,
            Observable::EnergyBand(1, 4),
        ]
    }

    #[test]
    fn observable_names_round_trip() {
        for o in all_observables() {
            assert_eq!(o.to_string().parse::<Observable>().unwrap(), o);
        }
        assert!("mode:x".parse::<Observable>().is_err());
        assert!("vorticity".parse::<Observable>().is_err());
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let cfg = SolverConfig::deterministic(8, 1e-2, 4.0, InitialCondition::Zero);
        let ms = kb_estimate(&cfg, &KbSettings::new(all_observables(), 1.0), 4, 0).unwrap();
        let m = &ms[0];
        for (i, o) in m.observables.iter().enumerate() {
            let expected = if *o == Observable::FTheta { 1.0 } else { 0.0 };
            assert!(m.samples[i].iter().all(|&x| x == expected));
            let h = &m.histograms[i];
            let nonzero: Vec<f64> = h.rows().into_iter().map(|r| r.2).filter(|&x| x > 0.0).collect();
            assert_eq!(nonzero, vec![1.0], "{o}");
            let row = h.rows().into_iter().find(|r| r.2 > 0.0).unwrap();
            assert!(row.0 <= expected && expected <= row.1);
        }
    }

    #[test]
    fn decaying_mode_matches_closed_form() {
        let init = InitialCondition::SingleMode { wave: WaveVector { kx: 1, ky: 0 }, phase: Phase::Cosine, amplitude: 1.0 };
        let dt = 1e-3;
        let cfg = SolverConfig::deterministic(8, dt, 0.1, init);
        let mut s = KbSettings::new(vec![Observable::L2Norm], 0.02);
        s.stride = Some(2);
        let ms = kb_estimate(&cfg, &s, 3, 0).unwrap();
        let lam = 4.0 * std::f64::consts::PI.powi(2);
        let exact: Vec<f64> = (20..100).step_by(2).map(|k| (-lam * k as f64 * dt).exp()).collect();
        assert_eq!(ms[0].per_trajectory, exact.len());
        for (x, e) in ms[0].samples[0].iter().zip(exact.iter().cycle()) {
            assert!((x - e).abs() < 1e-12);
        }
        let pilot: Vec<f64> = (20..=100).map(|k| (-lam * k as f64 * dt).exp()).collect();
        let expected = Histogram::build(&Histogram::edges_from_pilot(&pilot, false), &exact, false);
        for (a, b) in ms[0].histograms[0].mass.iter().zip(&expected.mass) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn histograms_are_normalized_and_counts_match() {
        let cfg = driven(3, 4.0, InitialCondition::Zero);
        let mut s = KbSettings::new(all_observables(), 1.0);
        s.stride = Some(25);
        s.windows = vec![(1.0, 2.5), (2.5, 4.0)];
        let ms = kb_estimate(&cfg, &s, 6, 0).unwrap();
        for m in &ms {
            assert_eq!(m.per_trajectory, 750 / 25);
            assert_eq!(m.sample_count(), 6 * 30);
            for h in &m.histograms {
                assert!((h.total_mass() - 1.0).abs() < 1e-12);
            }
            assert!(m.histograms[2].underflow.is_some());
        }
        let again = kb_estimate(&cfg, &s, 6, 3).unwrap();
        assert_eq!(ms, again);
    }

    #[test]
    fn adaptive_stride_respects_floor_and_cap() {
        let mut r = rng::stream(1, 2, 3, 4);
        let white: Vec<f64> = (0..5000).map(|_| r.random::<f64>()).collect();
        assert_eq!(adaptive_stride(&white, 1000), 10);
        let smooth: Vec<f64> = (0..5000).map(|i| (i as f64 / 500.0).sin()).collect();
        let s = adaptive_stride(&smooth, 1000);
        assert!(s > 10 && s <= 1000);
        assert_eq!(adaptive_stride(&smooth, 40), 40);
    }

    #[test]
    fn stationarity_detects_transient_and_accepts_identical() {
        let init = InitialCondition::SingleMode { wave: WaveVector { kx: 1, ky: 0 }, phase: Phase::Cosine, amplitude: 1.0 };
        let cfg = SolverConfig::deterministic(8, 1e-3, 0.2, init);
        let mut s = KbSettings::new(vec![Observable::L2Norm], 0.0);
        s.stride = Some(1);
        s.windows = vec![(0.0, 0.1), (0.1, 0.2)];
        let ms = kb_estimate(&cfg, &s, 16, 0).unwrap();
        let r = window_stationarity_test(&ms[0], &ms[1], 199, 1).unwrap();
        assert!(!r.comparisons[0].stationary);
        assert_eq!(r.comparisons[0].distance, 1.0);
        let same = window_stationarity_test(&ms[0], &ms[0], 199, 1).unwrap();
        assert_eq!(same.comparisons[0].distance, 0.0);
        assert!(same.passed());
        let mut overlap = ms[1].clone();
        overlap.window = (0.05, 0.15);
        assert!(window_stationarity_test(&ms[0], &overlap, 9, 1).is_err());
    }

    #[test]
    fn sensitivity_is_zero_for_identical_runs() {
        let cfg = driven(5, 2.0, InitialCondition::Zero);
        let mut s = KbSettings::new(vec![Observable::L2Norm], 1.0);
        s.stride = Some(10);
        let r = initial_condition_sensitivity(&[cfg.clone(), cfg], &s, 4, 0).unwrap();
        assert_eq!(r.pairs[0].2, vec![0.0]);
        assert!(r.baseline[0] > 0.0);
    }

    #[test]
    fn settings_are_validated() {
        let cfg = driven(5, 2.0, InitialCondition::Zero);
        assert!(kb_estimate(&cfg, &KbSettings::new(vec![Observable::L2Norm], 2.0), 4, 0).is_err());
        assert!(kb_estimate(&cfg, &KbSettings::new(vec![Observable::ModeCoeff(9)], 1.0), 4, 0).is_err());
        let mut s = KbSettings::new(vec![Observable::L2Norm], 1.0);
        s.windows = vec![(0.5, 1.5)];
        assert!(kb_estimate(&cfg, &s, 4, 0).is_err());
    }
}
