use std::sync::Arc;

use rayon::prelude::*;

use super::record::{StepScalars, TrajectoryRecord};
use super::{SolverConfig, SolverError, Stepper};
use crate::levy::{BigJump, CoefficientSequence, LevyNoiseSpec};
use crate::spectral::{Basis, SpectralField};

/// Receives the state after every step of a trajectory.
pub trait StepObserver {
    fn start(&mut self, u: &[f64]);
    /// `left` is the state just before the jump at step `k` (1-based).
    fn step(&mut self, k: usize, left: &[f64], u: &[f64], big_jumps: &[BigJump]);
}

/// Everything shared by the trajectories of one configuration.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: SolverConfig,
    pub basis: Arc<Basis>,
    pub lambdas: Vec<f64>,
    pub initial: SpectralField,
    stepper: Stepper,
}

impl RunContext {
    pub fn new(config: &SolverConfig) -> Result<Self, SolverError> {
        config.validate()?;
        let basis = Basis::new(config.n)?;
        let initial = config.initial_field(&basis)?;
        let stepper = Stepper::new(basis.clone(), config.dt, config.scheme);
        Ok(Self {
            config: config.clone(),
            lambdas: basis.eigenvalues().collect(),
            basis,
            initial,
            stepper,
        })
    }

    pub fn steps(&self) -> usize {
        self.config.steps()
    }
}

/// Runs trajectory `trajectory` of `ctx`, feeding every step to `observer`.
pub fn run_trajectory<O: StepObserver>(ctx: &RunContext, trajectory: u64, observer: &mut O) -> Result<(), SolverError> {
    let cfg = &ctx.config;
    let n = cfg.n;
    let mut stepper = ctx.stepper.clone();
    let mut u = ctx.initial.coeffs().to_vec();
    let mut left = vec![0.0; n];
    let mut big = Vec::new();
    observer.start(&u);
    for k in 1..=ctx.steps() {
        stepper.drift(&mut u);
        left.copy_from_slice(&u);
        big.clear();
        if let Some(noise) = &cfg.noise {
            let jumps: Vec<f64> =
                (1..=n).map(|j| noise.draw_mode(j, cfg.dt, cfg.seed, trajectory, (k - 1) as u64, &mut big)).collect();
            stepper.kick(&mut u, &jumps);
        }
        if u.iter().any(|a| !a.is_finite()) {
            return Err(SolverError::BlowUp { trajectory, step: k });
        }
        observer.step(k, &left, &u, &big);
    }
    Ok(())
}

struct Recorder<'a> {
    ctx: &'a RunContext,
    record: TrajectoryRecord,
}

impl StepObserver for Recorder<'_> {
    fn start(&mut self, u: &[f64]) {
        let r = &mut self.record;
        r.scalars.push(StepScalars::new(0.0, r.theta, &self.ctx.lambdas, u, u, 0));
        r.times.push(0.0);
        r.fields.push(self.ctx.initial.clone());
    }

    fn step(&mut self, k: usize, left: &[f64], u: &[f64], big_jumps: &[BigJump]) {
        let r = &mut self.record;
        let t = k as f64 * r.dt;
        r.scalars.push(StepScalars::new(t, r.theta, &self.ctx.lambdas, left, u, big_jumps.len()));
        r.big_jump_log.extend(big_jumps.iter().map(|&b| (k, b)));
        if k % self.ctx.config.snapshot_stride == 0 {
            r.times.push(t);
            r.fields.push(SpectralField::from_coeffs(self.ctx.basis.clone(), u.to_vec()).expect("basis size"));
        }
    }
}

impl TrajectoryRecord {
    pub(crate) fn run(ctx: &RunContext, trajectory: u64) -> Result<Self, SolverError> {
        let record = TrajectoryRecord {
            theta: ctx.config.theta,
            dt: ctx.config.dt,
            times: Vec::new(),
            fields: Vec::new(),
            scalars: Vec::with_capacity(ctx.steps() + 1),
            big_jump_log: Vec::new(),
        };
        let mut rec = Recorder { ctx, record };
        run_trajectory(ctx, trajectory, &mut rec)?;
        Ok(rec.record)
    }
}

impl SolverConfig {
    /// One trajectory over `[0, T]` with snapshots every `snapshot_stride` steps.
    pub fn simulate(&self) -> Result<TrajectoryRecord, SolverError> {
        TrajectoryRecord::run(&RunContext::new(self)?, 0)
    }
}

/// Running estimator terms of one trajectory at one horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonStats {
    pub t: f64,
    /// `sup_{s<=t} ||u_s||_0^theta`.
    pub sup_norm_theta: f64,
    /// `int_0^t ||grad u||^2 / (||u||^2 + 1)^{1-theta/2} ds`.
    pub weighted_enstrophy: f64,
    /// `int_0^t ||grad u||^theta ds`.
    pub gradient_moment: f64,
    pub big_jumps: usize,
}

/// Trapezoid rule over cadlag paths: each step uses the state at its start
/// and the left limit at its end, so jumps do not leak into the integral.
pub(crate) struct SummaryAccumulator {
    theta: f64,
    dt: f64,
    targets: Vec<(usize, f64)>,
    out: Vec<HorizonStats>,
    step: usize,
    sup: f64,
    enstrophy: f64,
    gradient: f64,
    jumps: usize,
    prev: Option<(f64, f64)>,
}

impl SummaryAccumulator {
    pub(crate) fn new(theta: f64, dt: f64, horizons: &[f64]) -> Self {
        let targets = horizons.iter().map(|&t| ((t / dt).round() as usize, t)).collect();
        Self {
            theta,
            dt,
            targets,
            out: Vec::with_capacity(horizons.len()),
            step: 0,
            sup: 0.0,
            enstrophy: 0.0,
            gradient: 0.0,
            jumps: 0,
            prev: None,
        }
    }

    fn enstrophy_density(&self, l2: f64, h1: f64) -> f64 {
        h1 * h1 / (l2 * l2 + 1.0).powf(1.0 - self.theta / 2.0)
    }

    pub(crate) fn push(&mut self, s: &StepScalars) {
        if let Some((l2, h1)) = self.prev {
            let a = self.enstrophy_density(l2, h1);
            let b = self.enstrophy_density(s.l2_left, s.h1_left);
            self.enstrophy += 0.5 * self.dt * (a + b);
            self.gradient += 0.5 * self.dt * (h1.powf(self.theta) + s.h1_left.powf(self.theta));
        }
        self.sup = self.sup.max(s.l2.powf(self.theta));
        self.jumps += s.big_jumps;
        self.prev = Some((s.l2, s.h1));
        for &(k, t) in &self.targets {
            if k == self.step {
                self.out.push(HorizonStats {
                    t,
                    sup_norm_theta: self.sup,
                    weighted_enstrophy: self.enstrophy,
                    gradient_moment: self.gradient,
                    big_jumps: self.jumps,
                });
            }
        }
        self.step += 1;
    }

    pub(crate) fn finish(self) -> Vec<HorizonStats> {
        self.out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySummary {
    pub trajectory: u64,
    /// Step at which the state became non-finite, if it did.
    pub blown_up: Option<usize>,
    /// Empty for blown-up trajectories.
    pub horizons: Vec<HorizonStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub horizons: Vec<f64>,
    pub summaries: Vec<TrajectorySummary>,
}

impl EnsembleResult {
    pub fn flagged(&self) -> usize {
        self.summaries.iter().filter(|s| s.blown_up.is_some()).count()
    }

    pub fn flagged_fraction(&self) -> f64 {
        self.flagged() as f64 / self.summaries.len().max(1) as f64
    }

    /// Summaries of the trajectories that stayed finite.
    pub fn completed(&self) -> impl Iterator<Item = &TrajectorySummary> {
        self.summaries.iter().filter(|s| s.blown_up.is_none())
    }

    /// Values of `f` at horizon index `h` over completed trajectories.
    pub fn column(&self, h: usize, f: impl Fn(&HorizonStats) -> f64) -> Vec<f64> {
        self.completed().map(|s| f(&s.horizons[h])).collect()
    }
}

/// Maps `f` over trajectory indices `0..m` on a pool of `workers` threads
/// (`0` for the default), returning results in index order.
pub fn map_trajectories<T: Send>(m: usize, workers: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    let run = || (0..m as u64).into_par_iter().map(&f).collect();
    if workers == 0 {
        return run();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}

struct SummaryObserver {
    acc: SummaryAccumulator,
    lambdas: Vec<f64>,
    theta: f64,
    dt: f64,
}

impl StepObserver for SummaryObserver {
    fn start(&mut self, u: &[f64]) {
        self.acc.push(&StepScalars::new(0.0, self.theta, &self.lambdas, u, u, 0));
    }

    fn step(&mut self, k: usize, left: &[f64], u: &[f64], big_jumps: &[BigJump]) {
        let s = StepScalars::new(k as f64 * self.dt, self.theta, &self.lambdas, left, u, big_jumps.len());
        self.acc.push(&s);
    }
}

/// `m` independent trajectories on disjoint streams, summarised at each of
/// `horizons` (default `[T]` when empty).
pub fn simulate_ensemble(
    config: &SolverConfig,
    m: usize,
    workers: usize,
    horizons: &[f64],
) -> Result<EnsembleResult, SolverError> {
    if m == 0 {
        return Err(SolverError::InvalidConfig("ensemble size must be at least 1".into()));
    }
    let horizons: Vec<f64> = if horizons.is_empty() { vec![config.horizon] } else { horizons.to_vec() };
    for &t in &horizons {
        if !(t >= 0.0) || config.step_of(t) > config.steps() {
            return Err(SolverError::InvalidConfig(format!("horizon {t} lies outside [0, {}]", config.horizon)));
        }
    }
    let ctx = RunContext::new(config)?;
    let summaries = map_trajectories(m, workers, |traj| {
        let mut obs = SummaryObserver {
            acc: SummaryAccumulator::new(config.theta, config.dt, &horizons),
            lambdas: ctx.lambdas.clone(),
            theta: config.theta,
            dt: config.dt,
        };
        match run_trajectory(&ctx, traj, &mut obs) {
            Ok(()) => TrajectorySummary { trajectory: traj, blown_up: None, horizons: obs.acc.finish() },
            Err(SolverError::BlowUp { step, .. }) => TrajectorySummary { trajectory: traj, blown_up: Some(step), horizons: Vec::new() },
            Err(e) => unreachable!("validated configuration failed mid-run: {e}"),
        }
    });
    Ok(EnsembleResult { horizons, summaries })
}

/// Runs sizes `n` and `2n` on the same noise, restricted to the first `m`
/// modes, and returns both records.
pub fn galerkin_pair(config: &SolverConfig, m: usize) -> Result<(TrajectoryRecord, TrajectoryRecord), SolverError> {
    if m > config.n {
        return Err(SolverError::InvalidConfig(format!("m={m} exceeds n={}", config.n)));
    }
    let restrict = |noise: &LevyNoiseSpec, size: usize| -> Result<LevyNoiseSpec, SolverError> {
        let mut values = noise.betas.values(m);
        values.resize(size, 0.0);
        Ok(LevyNoiseSpec::new(noise.measure, CoefficientSequence::Explicit(values), noise.theta, noise.backend)?)
    };
    let mut small = config.clone();
    let mut large = SolverConfig { n: 2 * config.n, ..config.clone() };
    if let Some(noise) = &config.noise {
        small.noise = Some(restrict(noise, small.n)?);
        large.noise = Some(restrict(noise, large.n)?);
    }
    Ok((small.simulate()?, large.simulate()?))
}

/// Largest difference over the first `m` final coefficients between sizes
/// `n` and `2n` driven by the same noise on those modes.
pub fn galerkin_gap(config: &SolverConfig, m: usize) -> Result<f64, SolverError> {
    let (a, b) = galerkin_pair(config, m)?;
    let (a, b) = (a.final_field().coeffs(), b.final_field().coeffs());
    Ok((0..m).map(|j| (a[j] - b[j]).abs()).fold(0.0, f64::max))
}
