use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

/// One symmetric alpha-stable draw with `E exp(i xi X) = exp(-(scale |xi|)^alpha)`,
/// by the Chambers-Mallows-Stuck transform.
pub fn sample_stable<R: Rng + ?Sized>(alpha: f64, scale: f64, rng: &mut R) -> f64 {
    debug_assert!(alpha > 0.0 && alpha <= 2.0);
    let u: f64 = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    let v = PI * (u - 0.5);
    if alpha == 1.0 {
        return scale * v.tan();
    }
    let w: f64 = Exp1.sample(rng);
    let x = (alpha * v).sin() / v.cos().powf(1.0 / alpha) * ((v - alpha * v).cos() / w).powf((1.0 - alpha) / alpha);
    scale * x
}
