use std::sync::Arc;

use super::{Basis, SpectralError};

/// Divergence-free, mean-zero velocity field `u = sum_j a_j e_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    basis: Arc<Basis>,
    coeffs: Vec<f64>,
}

/// Pointwise velocity samples on an `N x N` grid, row-major in `(i, l)` with
/// `x = (i / N, l / N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    pub resolution: usize,
    pub values: Vec<[f64; 2]>,
}

impl VelocityGrid {
    pub fn at(&self, i: usize, l: usize) -> [f64; 2] {
        self.values[i * self.resolution + l]
    }

    /// Grid average of `|u|^2`.
    pub fn mean_square(&self) -> f64 {
        self.values.iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum::<f64>() / self.values.len() as f64
    }
}

impl SpectralField {
    pub fn zeros(basis: Arc<Basis>) -> Self {
        let n = basis.len();
        Self { basis, coeffs: vec![0.0; n] }
    }

    pub fn from_coeffs(basis: Arc<Basis>, coeffs: Vec<f64>) -> Result<Self, SpectralError> {
        if coeffs.len() != basis.len() {
            return Err(SpectralError::LengthMismatch { expected: basis.len(), found: coeffs.len() });
        }
        Ok(Self { basis, coeffs })
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient by 1-based mode index.
    pub fn coeff(&self, j: usize) -> f64 {
        self.coeffs[j - 1]
    }

    /// `H^gamma` norm, `(sum_j lambda_j^gamma a_j^2)^(1/2)`.
    pub fn norm(&self, gamma: f64) -> f64 {
        sobolev_norm_sq(&self.basis, &self.coeffs, gamma).sqrt()
    }

    /// L2 inner product `<u, v>_0`.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    /// Galerkin projection onto the span of the first `m` modes.
    pub fn project(&self, m: usize) -> Result<Self, SpectralError> {
        if m > self.len() {
            return Err(SpectralError::ProjectionTooLarge { m, n: self.len() });
        }
        let mut out = self.clone();
        out.coeffs[m..].iter_mut().for_each(|a| *a = 0.0);
        Ok(out)
    }

    /// Re-express this field on another basis, truncating or zero-padding.
    pub fn rebase(&self, basis: Arc<Basis>) -> Self {
        let mut coeffs = vec![0.0; basis.len()];
        let k = coeffs.len().min(self.len());
        coeffs[..k].copy_from_slice(&self.coeffs[..k]);
        Self { basis, coeffs }
    }

    pub fn sub(&self, other: &SpectralField) -> Self {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Self { basis: self.basis.clone(), coeffs }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|a| a.is_finite())
    }

    /// `Pi_m((u . grad) u)` by exact Fourier convolution.
    pub fn nonlinear_term(&self, m: usize) -> Result<Self, SpectralError> {
        if m > self.len() {
            return Err(SpectralError::ProjectionTooLarge { m, n: self.len() });
        }
        let mut out = vec![0.0; self.len()];
        self.basis.triads().apply(&self.coeffs, m, &mut out);
        Ok(Self { basis: self.basis.clone(), coeffs: out })
    }

    /// `<u (x) u, grad e_j>_0` for 1-based `j`, the weak-form adjoint of the
    /// nonlinearity: equal to `-<(u . grad) u, e_j>_0` for divergence-free `u`.
    pub fn weak_advection(&self, j: usize) -> f64 {
        -self.basis.triads().component(&self.coeffs, j - 1)
    }

    /// Samples `u` on the uniform `resolution x resolution` grid.
    pub fn evaluate(&self, resolution: usize) -> Result<VelocityGrid, SpectralError> {
        let kmax = self.basis.max_wavenumber();
        let required = (2 * kmax + 1) as usize;
        if resolution < required {
            return Err(SpectralError::Aliasing { resolution, required });
        }
        let h = 1.0 / resolution as f64;
        let mut values = Vec::with_capacity(resolution * resolution);
        for i in 0..resolution {
            for l in 0..resolution {
                let x = [i as f64 * h, l as f64 * h];
                let mut v = [0.0; 2];
                for (mode, &a) in self.basis.modes().iter().zip(&self.coeffs) {
                    if a != 0.0 {
                        let e = mode.value_at(x);
                        v[0] += a * e[0];
                        v[1] += a * e[1];
                    }
                }
                values.push(v);
            }
        }
        Ok(VelocityGrid { resolution, values })
    }
}

pub(crate) fn sobolev_norm_sq(basis: &Basis, coeffs: &[f64], gamma: f64) -> f64 {
    if gamma == 0.0 {
        return coeffs.iter().map(|a| a * a).sum();
    }
    basis.eigenvalues().zip(coeffs).map(|(l, a)| l.powf(gamma) * a * a).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn field(n: usize, coeffs: &[f64]) -> SpectralField {
        let b = Basis::new(n).unwrap();
        let mut c = vec![0.0; n];
        c[..coeffs.len()].copy_from_slice(coeffs);
        SpectralField::from_coeffs(b, c).unwrap()
    }

    #[test]
    fn norms_of_simple_fields() {
        let z = field(6, &[]);
        for g in [-1.0, 0.0, 0.5, 1.0, 2.0] {
            assert_eq!(z.norm(g), 0.0);
        }
        let u = field(4, &[2.0]);
        assert!((u.norm(1.0) - 4.0 * PI).abs() < 1e-12);
        let u = field(4, &[1.0]);
        assert!((u.norm(-1.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn projection_examples() {
        let u = field(4, &[1.0, 3.0, -2.0]);
        assert_eq!(u.project(4).unwrap(), u);
        let p = u.project(1).unwrap();
        assert_eq!(p.coeffs(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.project(1).unwrap(), p);
        assert!(u.project(5).is_err());
    }

    #[test]
    fn evaluate_rejects_coarse_grids() {
        let u = field(8, &[1.0]);
        // n = 8 reaches |k| = 1 in each direction, so 3 points are needed.
        assert!(matches!(u.evaluate(2), Err(SpectralError::Aliasing { required: 3, .. })));
        assert!(u.evaluate(3).is_ok());
    }

    #[test]
    fn evaluate_single_cosine_at_crest() {
        let b = Basis::new(4).unwrap();
        let j = b.position(super::super::WaveVector { kx: 1, ky: 0 }, super::super::Phase::Cosine).unwrap();
        let mut c = vec![0.0; 4];
        c[j] = 0.7;
        let u = SpectralField::from_coeffs(b.clone(), c).unwrap();
        let g = u.evaluate(8).unwrap();
        let v = g.at(0, 0);
        let d = b.modes()[j].direction;
        assert!((v[0] - 0.7 * 2f64.sqrt() * d[0]).abs() < 1e-15);
        assert!((v[1] - 0.7 * 2f64.sqrt() * d[1]).abs() < 1e-15);
        assert_eq!(field(6, &[]).evaluate(16).unwrap().mean_square(), 0.0);
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_contracting(
            coeffs in proptest::collection::vec(-5.0f64..5.0, 12),
            m in 1usize..=12,
            gamma in -2.0f64..2.0,
        ) {
            let u = field(12, &coeffs);
            let p = u.project(m).unwrap();
            prop_assert_eq!(p.project(m).unwrap(), p.clone());
            prop_assert!(p.norm(gamma) <= u.norm(gamma) * (1.0 + 1e-14));
        }

        #[test]
        fn interpolation_and_poincare(coeffs in proptest::collection::vec(-5.0f64..5.0, 20)) {
            let u = field(20, &coeffs);
            let l0 = u.norm(0.0);
            prop_assert!(l0 <= (u.norm(-1.0) * u.norm(1.0)).sqrt() * (1.0 + 1e-12) + 1e-300);
            let lambda1 = 4.0 * PI * PI;
            prop_assert!(l0 * l0 <= u.norm(1.0).powi(2) / lambda1 * (1.0 + 1e-12) + 1e-300);
        }
    }
}
