//! Small statistical toolkit: Monte Carlo means, empirical characteristic
//! functions, two-sample Kolmogorov-Smirnov tests and the Hill estimator.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

pub fn mean_estimate(xs: &[f64]) -> MeanEstimate {
    let n = xs.len();
    if n == 0 {
        return MeanEstimate { mean: f64::NAN, std_error: f64::NAN, count: 0 };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    MeanEstimate { mean, std_error, count: n }
}

/// Empirical characteristic function `mean(exp(i xi X))` with per-component
/// standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalCf {
    pub value: Complex64,
    pub se_re: f64,
    pub se_im: f64,
}

impl EmpiricalCf {
    /// Largest of the real and imaginary z-scores against `target`.
    pub fn z_score(&self, target: Complex64, extra_se: f64) -> f64 {
        let z = |d: f64, se: f64| {
            let s = (se * se + extra_se * extra_se).sqrt();
            if d == 0.0 {
                0.0
            } else if s == 0.0 {
                f64::INFINITY
            } else {
                d.abs() / s
            }
        };
        z(self.value.re - target.re, self.se_re).max(z(self.value.im - target.im, self.se_im))
    }
}

pub fn empirical_cf_of<I: IntoIterator<Item = f64>>(phases: I) -> EmpiricalCf {
    let (mut n, mut c, mut s, mut cc, mut ss) = (0usize, 0.0, 0.0, 0.0, 0.0);
    for p in phases {
        let (si, co) = p.sin_cos();
        n += 1;
        c += co;
        s += si;
        cc += co * co;
        ss += si * si;
    }
    let nf = n as f64;
    let (mc, ms) = (c / nf, s / nf);
    let se = |sq: f64, m: f64| {
        if n > 1 {
            ((sq / nf - m * m).max(0.0) * nf / (nf - 1.0) / nf).sqrt()
        } else {
            0.0
        }
    };
    EmpiricalCf { value: Complex64::new(mc, ms), se_re: se(cc, mc), se_im: se(ss, ms) }
}

pub fn empirical_cf(xs: &[f64], xi: f64) -> EmpiricalCf {
    empirical_cf_of(xs.iter().map(|x| xi * x))
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_x - F_y|`.
pub fn ks_statistic(xs: &[f64], ys: &[f64]) -> f64 {
    let (x, y) = (sorted(xs), sorted(ys));
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic Kolmogorov survival function `Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value of the two-sample KS statistic with the usual
/// small-sample correction.
pub fn ks_asymptotic_pvalue(d: f64, n: usize, m: usize) -> f64 {
    let ne = (n * m) as f64 / (n + m) as f64;
    let sq = ne.sqrt();
    kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d)
}

/// Critical value of the two-sample KS statistic at significance `level`.
pub fn ks_critical_value(n: usize, m: usize, level: f64) -> f64 {
    let c = (-(level / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n * m) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationKs {
    pub statistic: f64,
    pub p_value: f64,
    pub permutations: usize,
}

/// KS distance with a label-permutation p-value `(1 + #{D* >= D}) / (1 + B)`.
pub fn ks_permutation_test<R: Rng + ?Sized>(xs: &[f64], ys: &[f64], permutations: usize, rng: &mut R) -> PermutationKs {
    let mut pooled: Vec<(f64, bool)> = xs.iter().map(|&v| (v, true)).chain(ys.iter().map(|&v| (v, false))).collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let values: Vec<f64> = pooled.iter().map(|p| p.0).collect();
    let mut labels: Vec<bool> = pooled.iter().map(|p| p.1).collect();
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let distance = |labels: &[bool]| {
        let (mut cx, mut cy, mut d) = (0.0, 0.0, 0.0f64);
        for (k, &is_x) in labels.iter().enumerate() {
            if is_x {
                cx += 1.0;
            } else {
                cy += 1.0;
            }
            // Only compare at the end of a run of tied values.
            if k + 1 == values.len() || values[k + 1] != values[k] {
                d = d.max((cx / n - cy / m).abs());
            }
        }
        d
    };
    let observed = distance(&labels);
    let mut exceed = 0usize;
    for _ in 0..permutations {
        labels.shuffle(rng);
        if distance(&labels) >= observed - 1e-12 {
            exceed += 1;
        }
    }
    PermutationKs {
        statistic: observed,
        p_value: (1 + exceed) as f64 / (1 + permutations) as f64,
        permutations,
    }
}

/// Hill estimator of the tail index from the `k` largest absolute values.
pub fn hill_estimator(xs: &[f64], k: usize) -> f64 {
    let mut a: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
    assert!(k >= 1 && k < a.len(), "hill estimator needs 1 <= k < sample size");
    let idx = a.len() - k - 1;
    a.select_nth_unstable_by(idx, f64::total_cmp);
    let threshold = a[idx].ln();
    let sum: f64 = a[idx + 1..].iter().map(|x| x.ln() - threshold).sum();
    k as f64 / sum
}

/// Empirical quantile with linear interpolation.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let v = sorted(xs);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Lag-`lag` autocorrelation of a series.
pub fn autocorrelation(xs: &[f64], lag: usize) -> f64 {
    if xs.len() <= lag + 1 {
        return f64::NAN;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    if var == 0.0 {
        return 1.0;
    }
    let cov: f64 = xs.windows(lag + 1).map(|w| (w[0] - mean) * (w[lag] - mean)).sum();
    cov / var
}
