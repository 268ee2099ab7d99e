use super::DiagnosticsError;
use crate::spectral::SpectralField;

fn weight(u: &SpectralField) -> f64 {
    u.coeffs().iter().map(|a| a * a).sum::<f64>() + 1.0
}

/// `(||u||_0^2 + 1)^{theta/2}`.
pub fn f_theta(u: &SpectralField, theta: f64) -> f64 {
    weight(u).powf(theta / 2.0)
}

/// `theta u / (||u||_0^2 + 1)^{1 - theta/2}`.
pub fn grad_f_theta(u: &SpectralField, theta: f64) -> SpectralField {
    let scale = theta * weight(u).powf(theta / 2.0 - 1.0);
    let c = u.coeffs().iter().map(|a| scale * a).collect();
    SpectralField::from_coeffs(u.basis().clone(), c).expect("same basis")
}

/// Row-major Hessian of `f_theta` in coefficient space:
/// `theta w^{theta/2-1} I + theta (theta - 2) w^{theta/2-2} u u^T`, `w = ||u||^2 + 1`.
pub fn hessian_f_theta(u: &SpectralField, theta: f64) -> Vec<f64> {
    let n = u.len();
    let w = weight(u);
    let diag = theta * w.powf(theta / 2.0 - 1.0);
    let outer = theta * (theta - 2.0) * w.powf(theta / 2.0 - 2.0);
    let a = u.coeffs();
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] = outer * a[i] * a[j] + if i == j { diag } else { 0.0 };
        }
    }
    h
}

/// `n theta / (||u||^2 + 1)^{1 - theta/2}`, an upper bound for the Hessian trace.
pub fn hessian_trace_bound(u: &SpectralField, theta: f64) -> f64 {
    u.len() as f64 * theta / weight(u).powf(1.0 - theta / 2.0)
}

/// Checks `|f(u) - f(v)| <= ||u - v||_0^theta` and returns the slack
/// `||u - v||^theta - |f(u) - f(v)|`. Rounding up to
/// `1e-12 (1 + f(u) + f(v))` is tolerated.
pub fn f_lipschitz_check(u: &SpectralField, v: &SpectralField, theta: f64) -> Result<f64, DiagnosticsError> {
    if u.len() != v.len() {
        return Err(DiagnosticsError::BasisMismatch { left: u.len(), right: v.len() });
    }
    let (fu, fv) = (f_theta(u, theta), f_theta(v, theta));
    let lhs = (fu - fv).abs();
    let dist: f64 = u.coeffs().iter().zip(v.coeffs()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let rhs = if dist == 0.0 { 0.0 } else { dist.powf(theta) };
    let slack = rhs - lhs;
    if slack < -1e-12 * (1.0 + fu + fv) {
        return Err(DiagnosticsError::LipschitzViolation {
            theta,
            lhs,
            rhs,
            u: u.coeffs().to_vec(),
            v: v.coeffs().to_vec(),
        });
    }
    Ok(slack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Basis;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn field(c: Vec<f64>) -> SpectralField {
        SpectralField::from_coeffs(Basis::new(c.len()).unwrap(), c).unwrap()
    }

    #[test]
    fn values() {
        assert_eq!(f_theta(&field(vec![0.0; 4]), 0.5), 1.0);
        let u = field(vec![1.0, 1.0, 1.0, 0.0]);
        assert!((f_theta(&u, 1.0) - 2.0).abs() < 1e-15);
        let g = grad_f_theta(&field(vec![1.0, 0.0]), 1.0);
        assert!((g.coeffs()[0] - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(grad_f_theta(&field(vec![0.0; 3]), 0.7).coeffs(), &[0.0; 3]);
    }

    #[test]
    fn lipschitz_examples() {
        let u = field(vec![0.3, -1.2, 0.0, 2.0]);
        assert_eq!(f_lipschitz_check(&u, &u, 0.5).unwrap(), 0.0);
        let zero = field(vec![0.0; 4]);
        let v = field(vec![1.0, 0.0, 0.0, 0.0]);
        let slack = f_lipschitz_check(&zero, &v, 1.0).unwrap();
        assert!((slack - (1.0 - (2f64.sqrt() - 1.0))).abs() < 1e-15);
        assert!(matches!(
            f_lipschitz_check(&zero, &field(vec![0.0; 3]), 1.0),
            Err(DiagnosticsError::BasisMismatch { .. })
        ));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(8);
        for theta in [0.3, 0.7, 1.0] {
            for _ in 0..20 {
                let scale = 10f64.powf(rng.random_range(-1.0..1.0));
                let c: Vec<f64> = (0..16).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
                let u = field(c.clone());
                let g = grad_f_theta(&u, theta);
                let h = 1e-6;
                for j in 0..16 {
                    let mut p = c.clone();
                    let mut m = c.clone();
                    p[j] += h;
                    m[j] -= h;
                    let fd = (f_theta(&field(p), theta) - f_theta(&field(m), theta)) / (2.0 * h);
                    assert!((fd - g.coeffs()[j]).abs() < 1e-6 * (1.0 + u.norm(0.0)));
                }
            }
        }
    }

    #[test]
    fn hessian_matches_gradient_differences_and_trace_bound() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(9);
        for theta in [0.3, 1.0] {
            let c: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
            let u = field(c.clone());
            let hess = hessian_f_theta(&u, theta);
            let h = 1e-5;
            for j in 0..8 {
                let mut p = c.clone();
                let mut m = c.clone();
                p[j] += h;
                m[j] -= h;
                let gp = grad_f_theta(&field(p), theta);
                let gm = grad_f_theta(&field(m), theta);
                for i in 0..8 {
                    let fd = (gp.coeffs()[i] - gm.coeffs()[i]) / (2.0 * h);
                    assert!((fd - hess[i * 8 + j]).abs() < 1e-7);
                }
            }
            let trace: f64 = (0..8).map(|i| hess[i * 9]).sum();
            assert!(trace <= hessian_trace_bound(&u, theta));
        }
    }

    proptest! {
        #[test]
        fn lipschitz_never_violated(
            theta in prop::sample::select(vec![0.3, 0.7, 1.0]),
            a in prop::collection::vec(-50.0f64..50.0, 32),
            b in prop::collection::vec(-50.0f64..50.0, 32),
            s in 1e-6f64..1.0,
        ) {
            let u = field(a.clone());
            let v = field(a.iter().zip(&b).map(|(x, y)| x + s * y).collect());
            prop_assert!(f_lipschitz_check(&u, &v, theta).is_ok());
            prop_assert!(f_theta(&u, theta) >= 1.0);
        }
    }
}
