//! Subcommand bodies. Each returns after writing its outputs through a [`Run`].

use std::path::{Path, PathBuf};

use levy_ns::diagnostics::{gradient_moment_report, martingale_cf_test, martingale_cf_with_halving, moment_bound_report, CharFunReport};
use levy_ns::invariant::{kb_estimate, window_stationarity_test, KbSettings, Observable};
use levy_ns::levy::sampler_check;
use levy_ns::solver::{simulate_ensemble, SolverError};
use levy_ns::spectral::snapshot::write_snapshot;
use levy_ns::spectral::Basis;
use log::{info, warn};

use crate::config::RunConfig;
use crate::output::{Csv, Run};

/// A failed run: exit status 2 for invalid input, 1 otherwise.
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Runtime(String),
}

impl Failure {
    pub fn runtime(e: impl std::fmt::Display) -> Self {
        Failure::Runtime(e.to_string())
    }
}

pub type Outcome = Result<(), Failure>;

fn io(e: std::io::Error) -> Failure {
    Failure::Runtime(format!("cannot write output: {e}"))
}

fn hash(cfg: &RunConfig) -> Option<&str> {
    Some(cfg.hash.as_str())
}

fn window_label((a, b): (f64, f64)) -> String {
    format!("{a}:{b}")
}

pub fn simulate(cfg: &RunConfig, run: &mut Run, output: &Path, snapshots: &Path) -> Outcome {
    let record = match cfg.solver.simulate() {
        Ok(r) => r,
        Err(SolverError::BlowUp { step, .. }) => {
            warn!("trajectory blew up at step {step}");
            run.record_trajectories(1, 1);
            return Ok(());
        }
        Err(e) => return Err(Failure::runtime(e)),
    };
    run.record_trajectories(1, 0);
    let mut csv = Csv::new(hash(cfg), &["t", "l2_norm", "h1_norm", "f_theta", "big_jumps"]);
    for s in &record.scalars {
        csv.row(&[&s.t, &s.l2, &s.h1, &s.f_theta, &s.big_jumps]);
    }
    run.write(output, &csv.into_bytes()).map_err(io)?;
    for (i, (field, &t)) in record.fields.iter().zip(&record.times).enumerate() {
        let mut buf = Vec::new();
        write_snapshot(&mut buf, field, record.theta, t).map_err(io)?;
        run.write(&snapshots.join(format!("snapshot_{i:06}.csv")), &buf).map_err(io)?;
    }
    info!("wrote {} steps and {} snapshots", record.scalars.len(), record.fields.len());
    Ok(())
}

fn horizons_or_default(cfg: &RunConfig, horizons: Option<Vec<f64>>) -> Vec<f64> {
    horizons.unwrap_or_else(|| cfg.diagnostics.horizons.clone())
}

pub fn ensemble(cfg: &RunConfig, run: &mut Run, workers: usize, m: Option<usize>, horizons: Option<Vec<f64>>, output: &Path) -> Outcome {
    let m = m.unwrap_or(cfg.diagnostics.trajectories);
    let horizons = horizons_or_default(cfg, horizons);
    let result = simulate_ensemble(&cfg.solver, m, workers, &horizons).map_err(|e| Failure::Invalid(e.to_string()))?;
    run.record_trajectories(m, result.flagged());
    let mut csv = Csv::new(
        hash(cfg),
        &["trajectory", "t", "sup_norm_theta", "weighted_enstrophy", "gradient_moment", "big_jumps", "blown_up_step"],
    );
    for s in &result.summaries {
        match s.blown_up {
            Some(step) => csv.row(&[&s.trajectory, &"", &"", &"", &"", &"", &step]),
            None => {
                for h in &s.horizons {
                    csv.row(&[&s.trajectory, &h.t, &h.sup_norm_theta, &h.weighted_enstrophy, &h.gradient_moment, &h.big_jumps, &""]);
                }
            }
        }
    }
    run.write(output, &csv.into_bytes()).map_err(io)
}

pub fn moments(cfg: &RunConfig, run: &mut Run, workers: usize, m: Option<usize>, horizons: Option<Vec<f64>>, output: &Path) -> Outcome {
    let m = m.unwrap_or(cfg.diagnostics.trajectories);
    let horizons = horizons_or_default(cfg, horizons);
    let ens = simulate_ensemble(&cfg.solver, m, workers, &horizons).map_err(|e| Failure::Invalid(e.to_string()))?;
    run.record_trajectories(m, ens.flagged());
    let report = moment_bound_report(&ens, cfg.solver.theta, cfg.initial_norm).map_err(|e| Failure::Invalid(e.to_string()))?;
    let lambda_1 = Basis::new(cfg.solver.n).map_err(Failure::runtime)?.lambda_1();
    let grad = gradient_moment_report(&ens, &report, lambda_1, cfg.diagnostics.affine_from).map_err(Failure::runtime)?;
    let mut csv = Csv::new(
        hash(cfg),
        &[
            "t",
            "sup_term",
            "sup_term_se",
            "integral_term",
            "integral_term_se",
            "lhs",
            "lhs_se",
            "ratio",
            "ratio_se",
            "envelope",
            "envelope_se",
            "gradient_moment",
            "gradient_moment_se",
            "gradient_bound",
        ],
    );
    for (i, t) in report.horizons.iter().enumerate() {
        let (s, int, l, r, e, g) =
            (report.sup_term[i], report.integral_term[i], report.lhs[i], report.ratios[i], report.envelope[i], grad.estimates[i]);
        csv.row(&[
            t,
            &s.mean,
            &s.std_error,
            &int.mean,
            &int.std_error,
            &l.mean,
            &l.std_error,
            &r.mean,
            &r.std_error,
            &e.mean,
            &e.std_error,
            &g.mean,
            &g.std_error,
            &grad.bounds[i],
        ]);
    }
    run.write(output, &csv.into_bytes()).map_err(io)?;
    println!(
        "envelope constant {:.6} (affine fit slope {:.6}, max residual {:.2} sigma); gradient-moment constant {:.6}, {} pathwise violations",
        report.constant().mean,
        report.fit.slope,
        report.fit.max_residual_z,
        grad.constant,
        grad.pathwise_violations
    );
    Ok(())
}

fn cf_rows(csv: &mut Csv, r: &CharFunReport) {
    for p in &r.points {
        csv.row(&[
            &r.mode,
            &r.dt,
            &p.s,
            &p.t,
            &p.xi,
            &p.empirical.value.re,
            &p.empirical.value.im,
            &p.empirical.se_re,
            &p.empirical.se_im,
            &p.theoretical.re,
            &p.theoretical.im,
            &p.z,
        ]);
    }
}

pub struct CfArgs {
    pub mode: Option<usize>,
    pub xi: Option<Vec<f64>>,
    pub pairs: Option<Vec<(f64, f64)>>,
    pub m: Option<usize>,
    pub halving: bool,
}

pub fn cf_test(cfg: &RunConfig, run: &mut Run, workers: usize, args: CfArgs, output: &Path) -> Outcome {
    let d = &cfg.diagnostics;
    let mode = args.mode.unwrap_or(d.mode);
    let xi = args.xi.unwrap_or_else(|| d.xi.clone());
    let pairs = args.pairs.unwrap_or_else(|| d.pairs.clone());
    let m = args.m.unwrap_or(10_000);
    let header =
        ["mode", "dt", "s", "t", "xi", "empirical_re", "empirical_im", "se_re", "se_im", "theoretical_re", "theoretical_im", "z"];
    let mut csv = Csv::new(hash(cfg), &header);
    let invalid = |e: levy_ns::diagnostics::DiagnosticsError| Failure::Invalid(e.to_string());
    if args.halving {
        let r = martingale_cf_with_halving(&cfg.solver, mode, &xi, &pairs, m, workers).map_err(invalid)?;
        run.record_trajectories(r.coarse.trajectories + r.fine.trajectories, r.coarse.flagged + r.fine.flagged);
        cf_rows(&mut csv, &r.coarse);
        cf_rows(&mut csv, &r.fine);
        println!(
            "pass fraction {:.3} at dt, {:.3} at dt/2; max disagreement {:.2} sigma; verdict {:?}",
            r.coarse.pass_fraction(),
            r.fine.pass_fraction(),
            r.max_disagreement_z,
            r.verdict
        );
    } else {
        let r = martingale_cf_test(&cfg.solver, mode, &xi, &pairs, m, workers).map_err(invalid)?;
        run.record_trajectories(r.trajectories, r.flagged);
        cf_rows(&mut csv, &r);
        println!("pass fraction {:.3}; {}", r.pass_fraction(), if r.passed() { "PASS" } else { "FAIL" });
    }
    run.write(output, &csv.into_bytes()).map_err(io)
}

pub struct InvariantArgs {
    pub m: Option<usize>,
    pub burn_in: Option<f64>,
    pub windows: Option<Vec<(f64, f64)>>,
    pub observables: Option<Vec<Observable>>,
    pub stride: Option<usize>,
    pub stationarity: Option<PathBuf>,
}

pub fn invariant(cfg: &RunConfig, run: &mut Run, workers: usize, args: InvariantArgs, output: &Path) -> Outcome {
    let inv = &cfg.invariant;
    let m = args.m.unwrap_or(inv.trajectories);
    let settings = KbSettings {
        observables: args.observables.unwrap_or_else(|| inv.observables.clone()),
        burn_in: args.burn_in.unwrap_or(inv.burn_in),
        stride: args.stride.or(inv.stride),
        windows: args.windows.unwrap_or_else(|| inv.windows.clone()),
    };
    let measures = kb_estimate(&cfg.solver, &settings, m, workers).map_err(|e| Failure::Invalid(e.to_string()))?;
    run.record_trajectories(m, measures.first().map_or(0, |x| x.flagged));
    let mut csv = Csv::new(hash(cfg), &["observable", "bin_lo", "bin_hi", "mass", "window"]);
    for measure in &measures {
        if measure.underpowered {
            warn!("window {} has only {} samples", window_label(measure.window), measure.sample_count());
        }
        for (o, h) in measure.observables.iter().zip(&measure.histograms) {
            for (lo, hi, mass) in h.rows() {
                csv.row(&[o, &lo, &hi, &mass, &window_label(measure.window)]);
            }
        }
    }
    run.write(output, &csv.into_bytes()).map_err(io)?;
    if let Some(first) = measures.first() {
        let note = if first.stride_is_heuristic { " (heuristic)" } else { "" };
        println!("stride {} steps{note}, {} samples per window", first.stride, first.sample_count());
    }
    let mut stat = Csv::new(hash(cfg), &["window_a", "window_b", "observable", "distance", "p_value", "stationary"]);
    for pair in measures.windows(2) {
        let r = window_stationarity_test(&pair[0], &pair[1], 999, cfg.solver.seed).map_err(|e| Failure::Invalid(e.to_string()))?;
        for c in &r.comparisons {
            let (a, b) = (window_label(r.windows.0), window_label(r.windows.1));
            println!("{a} vs {b} {}: KS {:.4}, p {:.4}, {}", c.observable, c.distance, c.p_value, if c.stationary { "stationary" } else { "not stationary" });
            stat.row(&[&a, &b, &c.observable, &c.distance, &c.p_value, &c.stationary]);
        }
    }
    if let Some(path) = args.stationarity {
        run.write(&path, &stat.into_bytes()).map_err(io)?;
    }
    Ok(())
}

pub fn sampler_test(hash: Option<&str>, run: &mut Run, alpha: f64, draws: usize, similarity_draws: usize, seed: u64, output: &Path) -> Outcome {
    let r = sampler_check(alpha, draws, similarity_draws, seed).map_err(|e| Failure::Invalid(e.to_string()))?;
    let mut csv = Csv::new(hash, &["quantity", "value", "reference", "tolerance", "passed"]);
    if let (Some(reference), Some(passed)) = (r.cauchy_median, r.median_passed(0.01)) {
        csv.row(&[&"median_abs", &r.median_abs, &reference, &0.01, &passed]);
        println!("median |X| = {:.5} (Cauchy reference 1, tolerance 0.01): {}", r.median_abs, if passed { "PASS" } else { "FAIL" });
    } else {
        csv.row(&[&"median_abs", &r.median_abs, &"", &"", &""]);
    }
    csv.row(&[&"hill_alpha", &r.hill_alpha, &alpha, &0.05, &r.hill_passed(0.05)]);
    let s = r.self_similarity;
    csv.row(&[&"self_similarity_ks", &s.statistic, &s.critical_value, &"", &s.passed()]);
    println!("Hill index {:.4} from the top {} of {} draws", r.hill_alpha, r.hill_k, r.draws);
    println!("self-similarity KS {:.5} against critical value {:.5}", s.statistic, s.critical_value);
    run.write(output, &csv.into_bytes()).map_err(io)
}

/// Exit-status view of an ensemble's flagged fraction.
pub fn blow_up_dominated(run: &Run) -> bool {
    run.flagged_fraction() > 0.01
}
