use super::DiagnosticsError;
use crate::solver::TrajectoryRecord;
use crate::spectral::SpectralField;

fn check_m(record: &TrajectoryRecord, m: usize) -> Result<usize, DiagnosticsError> {
    let n = record.final_field().len();
    if m == 0 || m > n {
        return Err(DiagnosticsError::InvalidArgument(format!("m={m} is outside 1..={n}")));
    }
    Ok(n)
}

fn tail_of(u: &SpectralField, m: usize) -> f64 {
    u.basis().modes()[m - 1..].iter().zip(&u.coeffs()[m - 1..]).map(|(e, a)| a * a / (e.eigenvalue * e.eigenvalue)).sum()
}

/// `sup_s sum_{j >= m} a_j(s)^2 / lambda_j^2` over the recorded snapshots
/// (`m` is 1-based).
pub fn tail_energy(record: &TrajectoryRecord, m: usize) -> Result<f64, DiagnosticsError> {
    check_m(record, m)?;
    Ok(record.fields.iter().map(|u| tail_of(u, m)).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEnergyCheck {
    pub m: usize,
    pub tail: f64,
    /// `lambda_m^{-2} sup_s ||u_s||_0^2`.
    pub bound: f64,
    pub holds: bool,
}

/// Compares the tail energy with `lambda_m^{-2} sup_s ||u_s||^2`. The bound
/// is summed term by term in the order of the tail so the comparison is
/// exact in floating point.
pub fn tail_energy_check(record: &TrajectoryRecord, m: usize) -> Result<TailEnergyCheck, DiagnosticsError> {
    check_m(record, m)?;
    let mut tail: f64 = 0.0;
    let mut bound: f64 = 0.0;
    for u in &record.fields {
        let lm = u.basis().mode(m).eigenvalue;
        let lm2 = lm * lm;
        let c = u.coeffs();
        let high: f64 = c[m - 1..].iter().map(|a| a * a / lm2).sum();
        let low: f64 = c[..m - 1].iter().map(|a| a * a / lm2).sum();
        tail = tail.max(tail_of(u, m));
        bound = bound.max(high + low);
    }
    Ok(TailEnergyCheck { m, tail, bound, holds: tail <= bound })
}

fn h_minus_one_distance(a: &SpectralField, b: &SpectralField) -> f64 {
    let longer = if a.len() >= b.len() { a } else { b };
    let coeff = |u: &SpectralField, j: usize| u.coeffs().get(j).copied().unwrap_or(0.0);
    longer
        .basis()
        .modes()
        .iter()
        .enumerate()
        .map(|(j, e)| (coeff(a, j) - coeff(b, j)).powi(2) / e.eigenvalue)
        .sum::<f64>()
        .sqrt()
}

/// `int_0^inf sup_{t<=r} min(||a_t - b_t||_{-1}, 1) e^{-r} dr` with the
/// identity time change, on the common snapshot grid. Paths are held
/// constant between and after snapshots; bases of different size are
/// compared on the larger one with zero padding.
pub fn skorohod_upper_bound(a: &TrajectoryRecord, b: &TrajectoryRecord) -> Result<f64, DiagnosticsError> {
    if a.times != b.times {
        return Err(DiagnosticsError::InvalidArgument("trajectories must share their snapshot times".into()));
    }
    let mut running: f64 = 0.0;
    let mut total = 0.0;
    for (k, (fa, fb)) in a.fields.iter().zip(&b.fields).enumerate() {
        running = running.max(h_minus_one_distance(fa, fb).min(1.0));
        let next = a.times.get(k + 1).map_or(0.0, |t| (-t).exp());
        total += running * ((-a.times[k]).exp() - next);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{CoefficientSequence, LevyMeasureSpec, LevyNoiseSpec, NoiseBackend};
    use crate::solver::{InitialCondition, SolverConfig};
    use crate::spectral::Basis;

    fn driven(seed: u64, n: usize) -> TrajectoryRecord {
        let noise = LevyNoiseSpec::new(
            LevyMeasureSpec::stable(1.5, 1.0).unwrap(),
            CoefficientSequence::Power(2.5),
            0.5,
            NoiseBackend::Exact,
        )
        .unwrap();
        SolverConfig {
            seed,
            snapshot_stride: 5,
            ..SolverConfig::deterministic(n, 1e-3, 0.5, InitialCondition::RandomSobolev { gamma: 0.0, norm: 2.0 })
        }
        .with_noise(noise)
        .simulate()
        .unwrap()
    }

    fn constant(c: Vec<f64>, times: Vec<f64>) -> TrajectoryRecord {
        let f = SpectralField::from_coeffs(Basis::new(c.len()).unwrap(), c).unwrap();
        TrajectoryRecord {
            theta: 1.0,
            dt: 1.0,
            fields: vec![f; times.len()],
            times,
            scalars: Vec::new(),
            big_jump_log: Vec::new(),
        }
    }

    #[test]
    fn tail_inequality_holds_exactly() {
        for seed in 0..20 {
            let rec = driven(seed, 32);
            for m in [1, 2, 16, 32] {
                let c = tail_energy_check(&rec, m).unwrap();
                assert!(c.holds, "seed {seed} m {m}");
                assert_eq!(c.tail, tail_energy(&rec, m).unwrap());
            }
        }
    }

    #[test]
    fn tail_edge_cases() {
        let rec = constant(vec![1.0, 2.0, 0.0, 0.0], vec![0.0, 1.0]);
        assert_eq!(tail_energy(&rec, 3).unwrap(), 0.0);
        let lam = 4.0 * std::f64::consts::PI.powi(2);
        let full = 5.0 / (lam * lam);
        assert!((tail_energy(&rec, 1).unwrap() - full).abs() < 1e-15 * full);
        assert!(tail_energy(&rec, 5).is_err());
    }

    #[test]
    fn skorohod_examples() {
        let a = driven(3, 16);
        assert_eq!(skorohod_upper_bound(&a, &a).unwrap(), 0.0);
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let c = constant(vec![0.3, 0.0, -0.2, 0.1], times.clone());
        let zero = constant(vec![0.0; 4], times);
        let expected = c.fields[0].norm(-1.0).min(1.0);
        assert!((skorohod_upper_bound(&c, &zero).unwrap() - expected).abs() < 1e-15);
        let big = constant(vec![30.0, 0.0, 0.0, 0.0], zero.times.clone());
        assert!((skorohod_upper_bound(&big, &zero).unwrap() - 1.0).abs() < 1e-15);
        let short = constant(vec![0.0; 4], vec![0.0]);
        assert!(skorohod_upper_bound(&c, &short).is_err());
    }
}
