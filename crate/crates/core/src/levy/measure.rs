use std::f64::consts::PI;

use num_complex::Complex64;

use super::LevyError;
use crate::quadrature::{integrate, QuadratureError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevyFamily {
    /// `nu(dx) = c |x|^{-1-alpha} dx` on `R \ {0}`.
    SymmetricStable,
    /// The stable density restricted to `|x| <= radius`.
    TruncatedStable { radius: f64 },
}

/// Symmetric Lévy measure of stable type, `nu(dx) = c |x|^{-1-alpha} dx`,
/// optionally truncated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyMeasureSpec {
    pub family: LevyFamily,
    pub alpha: f64,
    pub intensity: f64,
}

impl LevyMeasureSpec {
    pub fn new(family: LevyFamily, alpha: f64, intensity: f64) -> Result<Self, LevyError> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(LevyError::InvalidParameter(format!("alpha must lie in (0, 2), got {alpha}")));
        }
        if !(intensity > 0.0 && intensity.is_finite()) {
            return Err(LevyError::InvalidParameter(format!("intensity must be positive, got {intensity}")));
        }
        if let LevyFamily::TruncatedStable { radius } = family {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(LevyError::InvalidParameter(format!("truncation radius must be positive, got {radius}")));
            }
        }
        Ok(Self { family, alpha, intensity })
    }

    pub fn stable(alpha: f64, intensity: f64) -> Result<Self, LevyError> {
        Self::new(LevyFamily::SymmetricStable, alpha, intensity)
    }

    pub fn truncated(alpha: f64, intensity: f64, radius: f64) -> Result<Self, LevyError> {
        Self::new(LevyFamily::TruncatedStable { radius }, alpha, intensity)
    }

    pub fn radius(&self) -> Option<f64> {
        match self.family {
            LevyFamily::SymmetricStable => None,
            LevyFamily::TruncatedStable { radius } => Some(radius),
        }
    }

    /// Lebesgue density of `nu` at `y != 0`.
    pub fn density(&self, y: f64) -> f64 {
        let a = y.abs();
        if a == 0.0 || self.radius().is_some_and(|r| a > r) {
            return 0.0;
        }
        self.intensity * a.powf(-1.0 - self.alpha)
    }

    /// `nu(|y| > delta)`.
    pub fn tail_mass(&self, delta: f64) -> f64 {
        let two_c_over_alpha = 2.0 * self.intensity / self.alpha;
        let near = delta.powf(-self.alpha);
        match self.radius() {
            None => two_c_over_alpha * near,
            Some(r) if r <= delta => 0.0,
            Some(r) => two_c_over_alpha * (near - r.powf(-self.alpha)),
        }
    }

    /// `int_{|y| <= delta} y^2 nu(dy)`.
    pub fn small_jump_variance(&self, delta: f64) -> f64 {
        let top = self.radius().map_or(delta, |r| r.min(delta));
        2.0 * self.intensity * top.powf(2.0 - self.alpha) / (2.0 - self.alpha)
    }

    /// `int_{|x| > 1} |x|^theta nu(dx)`, or `None` when it diverges.
    pub fn big_jump_moment(&self, theta: f64) -> Option<f64> {
        let two_c = 2.0 * self.intensity;
        let e = theta - self.alpha;
        match self.radius() {
            None if e < 0.0 => Some(two_c / -e),
            None => None,
            Some(r) if r <= 1.0 => Some(0.0),
            Some(r) if e == 0.0 => Some(two_c * r.ln()),
            Some(r) => Some(two_c * (r.powf(e) - 1.0) / e),
        }
    }

    /// `sigma^alpha` such that `psi(xi) = -sigma^alpha |xi|^alpha` for the
    /// untruncated family: `pi c / (Gamma(1 + alpha) sin(pi alpha / 2))`.
    pub fn stable_scale_pow(&self) -> Option<f64> {
        match self.family {
            LevyFamily::SymmetricStable => {
                let a = self.alpha;
                Some(PI * self.intensity / (libm::tgamma(1.0 + a) * (PI * a / 2.0).sin()))
            }
            LevyFamily::TruncatedStable { .. } => None,
        }
    }

    /// Unit-time scale parameter of the stable increments.
    pub fn stable_scale(&self) -> Option<f64> {
        self.stable_scale_pow().map(|s| s.powf(1.0 / self.alpha))
    }

    /// Lévy symbol `psi(xi) = int (e^{i xi y} - 1 - i xi y 1_{|y|<=1}) nu(dy)`
    /// by adaptive quadrature, so that `E exp(i xi L_t) = exp(t psi(xi))`.
    pub fn symbol(&self, xi: f64) -> Result<Complex64, QuadratureError> {
        let w = xi.abs();
        if w == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let two_c = 2.0 * self.intensity;
        let p = 1.0 + self.alpha;
        let upper = self.radius().unwrap_or(f64::INFINITY);
        // Below `split` the cosine does not oscillate; substitute
        // y = split * s^m so the y^{1-alpha} singularity becomes smooth.
        let split = (PI / w).min(upper);
        let m = 1.0 / (2.0 - self.alpha);
        let near = integrate(
            |s| {
                if s == 0.0 {
                    return -0.5 * w * w * split.powf(3.0 - p) * m;
                }
                let y = split * s.powf(m);
                let cos_m1 = -2.0 * (0.5 * w * y).sin().powi(2);
                cos_m1 * y.powf(-p) * split * m * s.powf(m - 1.0)
            },
            0.0,
            1.0,
            1e-14,
            1e-12,
        )?;
        let mut re = near.value;
        if upper.is_finite() {
            if upper > split {
                let mid = integrate(|y| -2.0 * (0.5 * w * y).sin().powi(2) * y.powf(-p), split, upper, 1e-14, 1e-12)?;
                re += mid.value;
            }
        } else {
            // int_L^inf (cos(w y) - 1) y^{-p} dy, the oscillatory part along
            // the contour y = L + i t / w where it decays like e^{-t}.
            re -= split.powf(-self.alpha) / self.alpha;
            let phase = Complex64::new(0.0, w * split).exp() * Complex64::new(0.0, 1.0 / w);
            let integrand = |t: f64| {
                Complex64::new(split, t / w).powf(-p) * (-t).exp() * phase
            };
            let tail_re = integrate(|t| integrand(t).re, 0.0, 60.0, 1e-15, 1e-12)?;
            re += tail_re.value;
        }
        // The measure is symmetric: the odd part integrates to zero.
        Ok(Complex64::new(two_c * re, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_scale() {
        let cauchy = LevyMeasureSpec::stable(1.0, 1.0).unwrap();
        assert!((cauchy.stable_scale_pow().unwrap() - PI).abs() < 1e-12);
        // 2 c Gamma(1 - alpha) cos(pi alpha / 2) / alpha, the other common form.
        for a in [0.5, 0.8, 1.5, 1.9] {
            let m = LevyMeasureSpec::stable(a, 1.3).unwrap();
            let other = 2.0 * 1.3 * libm::tgamma(1.0 - a) * (PI * a / 2.0).cos() / a;
            assert!((m.stable_scale_pow().unwrap() - other).abs() < 1e-11 * other.abs());
        }
    }

    #[test]
    fn symbol_matches_closed_form() {
        for a in [0.5, 0.8, 1.0, 1.2, 1.5, 1.9] {
            let m = LevyMeasureSpec::stable(a, 1.0).unwrap();
            let s = m.stable_scale_pow().unwrap();
            for xi in [0.1, 0.5, 1.0, 3.0, 10.0] {
                let psi = m.symbol(xi).unwrap();
                let exact = -s * xi.powf(a);
                assert!((psi.re - exact).abs() < 1e-9 * exact.abs(), "alpha={a} xi={xi}: {} vs {exact}", psi.re);
                assert_eq!(psi.im, 0.0);
                assert_eq!(m.symbol(-xi).unwrap(), psi);
            }
        }
        assert_eq!(LevyMeasureSpec::stable(1.5, 1.0).unwrap().symbol(0.0).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn truncated_symbol_by_direct_quadrature() {
        let m = LevyMeasureSpec::truncated(1.5, 1.0, 3.0).unwrap();
        for xi in [0.3, 1.0, 4.0] {
            // Plain quadrature of the defining integral on (0, R], with a
            // small-y Taylor patch to avoid cancellation.
            let eps = 1e-4;
            let body = integrate(|y| 2.0 * ((xi * y).cos() - 1.0) * y.powf(-2.5), eps, 3.0, 1e-9, 1e-9).unwrap();
            let head = -xi * xi * eps.powf(0.5) / 0.5;
            let psi = m.symbol(xi).unwrap();
            assert!((psi.re - body.value - head).abs() < 1e-6, "{xi}");
        }
    }

    #[test]
    fn masses_and_moments() {
        let m = LevyMeasureSpec::stable(1.5, 1.0).unwrap();
        assert!((m.big_jump_moment(1.0).unwrap() - 4.0).abs() < 1e-15);
        assert!(m.big_jump_moment(1.5).is_none());
        assert!((m.tail_mass(1.0) - 2.0 / 1.5).abs() < 1e-15);
        let t = LevyMeasureSpec::truncated(1.5, 1.0, 1.0).unwrap();
        assert_eq!(t.big_jump_moment(1.0), Some(0.0));
        assert_eq!(t.tail_mass(1.0), 0.0);
        assert_eq!(t.density(1.5), 0.0);
        let t = LevyMeasureSpec::truncated(0.8, 1.0, 10.0).unwrap();
        assert!((t.big_jump_moment(0.8).unwrap() - 2.0 * 10f64.ln()).abs() < 1e-14);
        assert!(LevyMeasureSpec::stable(2.0, 1.0).is_err());
        assert!(LevyMeasureSpec::stable(1.0, 0.0).is_err());
    }
}
