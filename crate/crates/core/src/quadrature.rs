//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use thiserror::Error;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("quadrature did not converge: value {value}, achieved error {error}, requested {requested}")]
pub struct QuadratureError {
    pub value: f64,
    pub error: f64,
    pub requested: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    for (i, &x) in XGK[..7].iter().enumerate() {
        let dx = half * x;
        let s = f(center - dx) + f(center + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    Estimate { value: kron * half, error: ((kron - gauss) * half).abs() }
}

/// Integrates `f` over `[a, b]`, bisecting the worst interval until the
/// summed error estimate drops below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Estimate, QuadratureError> {
    const MAX_INTERVALS: usize = 2000;
    let first = kronrod(&f, a, b);
    let mut intervals = vec![(a, b, first)];
    loop {
        let value: f64 = intervals.iter().map(|i| i.2.value).sum();
        let error: f64 = intervals.iter().map(|i| i.2.error).sum();
        let requested = abs_tol.max(rel_tol * value.abs());
        if error <= requested {
            return Ok(Estimate { value, error });
        }
        if intervals.len() >= MAX_INTERVALS || !error.is_finite() {
            return Err(QuadratureError { value, error, requested });
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.error.total_cmp(&y.1 .2.error))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        intervals.push((lo, mid, kronrod(&f, lo, mid)));
        intervals.push((mid, hi, kronrod(&f, mid, hi)));
    }
}
