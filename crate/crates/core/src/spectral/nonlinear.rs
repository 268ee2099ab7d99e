//! The projected advection term `Pi_m((u . grad) u)`.
//!
//! The default path is an exact triad convolution: for basis size `n` the
//! quadratic form `B_j(u) = sum_{a,b} C_{jab} u_a u_b` is tabulated once per
//! basis from the complex Fourier representation of the modes. The
//! collocation path evaluates the same product on a padded grid with FFTs.

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Basis, BasisMode, Phase, SpectralError, SpectralField, WaveVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NonlinearBackend {
    #[default]
    Convolution,
    /// Pseudo-spectral product on a grid padded past the 2/3 rule.
    Collocation,
}

/// Sparse table of `C_{jab} = <(e_a . grad) e_b, e_j>_0`, grouped by `j`.
#[derive(Debug, Clone)]
pub(crate) struct TriadTensor {
    row_start: Vec<usize>,
    entries: Vec<(u32, u32, f64)>,
}

/// Complex amplitude of a mode at `sign * k`: `e = amp * direction * exp(2 pi i (sign k).x)`.
fn amplitude(phase: Phase, sign: i64) -> Complex64 {
    let h = 1.0 / SQRT_2;
    match phase {
        Phase::Cosine => Complex64::new(h, 0.0),
        Phase::Sine => Complex64::new(0.0, -h * sign as f64),
    }
}

/// Projection of a Fourier coefficient `w_hat` at the mode's own (canonical)
/// wave vector onto the mode.
fn project_coefficient(mode: &BasisMode, w_hat: [Complex64; 2]) -> f64 {
    let dot = w_hat[0] * mode.direction[0] + w_hat[1] * mode.direction[1];
    match mode.phase {
        Phase::Cosine => SQRT_2 * dot.re,
        Phase::Sine => -SQRT_2 * dot.im,
    }
}

impl TriadTensor {
    pub(crate) fn build(basis: &Basis) -> Self {
        let modes = basis.modes();
        let n = modes.len();
        let mut by_wave: HashMap<WaveVector, Vec<usize>> = HashMap::new();
        for (i, m) in modes.iter().enumerate() {
            by_wave.entry(m.wave).or_default().push(i);
        }
        let mut acc: HashMap<(usize, usize, usize), f64> = HashMap::new();
        for (ia, ma) in modes.iter().enumerate() {
            for sa in [1i64, -1] {
                let ca = amplitude(ma.phase, sa);
                for (ib, mb) in modes.iter().enumerate() {
                    for sb in [1i64, -1] {
                        let (qx, qy) = (sb * mb.wave.kx, sb * mb.wave.ky);
                        let Some(p) = WaveVector::new(sa * ma.wave.kx + qx, sa * ma.wave.ky + qy) else {
                            continue;
                        };
                        let Some(targets) = by_wave.get(&p) else { continue };
                        let da_q = ma.direction[0] * qx as f64 + ma.direction[1] * qy as f64;
                        if da_q == 0.0 {
                            continue;
                        }
                        let z = ca * amplitude(mb.phase, sb) * Complex64::new(0.0, 2.0 * PI * da_q);
                        let w_hat = [z * mb.direction[0], z * mb.direction[1]];
                        for &j in targets {
                            let v = project_coefficient(&modes[j], w_hat);
                            *acc.entry((j, ia, ib)).or_insert(0.0) += v;
                        }
                    }
                }
            }
        }
        let scale = 2.0 * PI * basis.max_wavenumber() as f64;
        let mut triples: Vec<_> = acc.into_iter().filter(|(_, v)| v.abs() > 1e-13 * scale).collect();
        triples.sort_by_key(|&(k, _)| k);
        let mut row_start = vec![0; n + 1];
        let mut entries = Vec::with_capacity(triples.len());
        for ((j, a, b), v) in triples {
            row_start[j + 1] += 1;
            entries.push((a as u32, b as u32, v));
        }
        for j in 0..n {
            row_start[j + 1] += row_start[j];
        }
        Self { row_start, entries }
    }

    /// `B_j(u)` for 0-based `j`.
    pub(crate) fn component(&self, u: &[f64], j: usize) -> f64 {
        self.entries[self.row_start[j]..self.row_start[j + 1]]
            .iter()
            .map(|&(a, b, c)| c * u[a as usize] * u[b as usize])
            .sum()
    }

    /// Writes `Pi_m B(u, u)` into `out`.
    pub(crate) fn apply(&self, u: &[f64], m: usize, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = if j < m { self.component(u, j) } else { 0.0 };
        }
    }

    #[cfg(test)]
    pub(crate) fn nnz(&self) -> usize {
        self.entries.len()
    }
}

/// Padded-grid FFT evaluation of the advection term.
pub struct Collocation {
    basis: Arc<Basis>,
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Collocation {
    pub fn new(basis: Arc<Basis>) -> Self {
        let size = (3 * basis.max_wavenumber() + 1).max(4) as usize;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        Self { basis, size, forward, inverse }
    }

    pub fn grid_size(&self) -> usize {
        self.size
    }

    fn wrap(&self, k: i64) -> usize {
        k.rem_euclid(self.size as i64) as usize
    }

    fn fft2(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.size;
        for row in data.chunks_exact_mut(n) {
            fft.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for iy in 0..n {
            for ix in 0..n {
                col[ix] = data[ix * n + iy];
            }
            fft.process(&mut col);
            for ix in 0..n {
                data[ix * n + iy] = col[ix];
            }
        }
    }

    pub fn apply(&self, u: &SpectralField, m: usize) -> Result<SpectralField, SpectralError> {
        if m > u.len() {
            return Err(SpectralError::ProjectionTooLarge { m, n: u.len() });
        }
        let n = self.size;
        let zero = Complex64::new(0.0, 0.0);
        // u_x, u_y and their x- and y-derivatives in Fourier space.
        let mut hats = vec![vec![zero; n * n]; 6];
        for (mode, &a) in self.basis.modes().iter().zip(u.coeffs()) {
            if a == 0.0 {
                continue;
            }
            for s in [1i64, -1] {
                let (kx, ky) = (s * mode.wave.kx, s * mode.wave.ky);
                let idx = self.wrap(kx) * n + self.wrap(ky);
                let c = amplitude(mode.phase, s) * a;
                let dx = Complex64::new(0.0, 2.0 * PI * kx as f64);
                let dy = Complex64::new(0.0, 2.0 * PI * ky as f64);
                for (comp, d) in mode.direction.iter().enumerate() {
                    let v = c * *d;
                    hats[comp][idx] += v;
                    hats[2 + 2 * comp][idx] += v * dx;
                    hats[3 + 2 * comp][idx] += v * dy;
                }
            }
        }
        for h in hats.iter_mut() {
            self.fft2(h, &self.inverse);
        }
        let mut w = vec![vec![zero; n * n]; 2];
        for i in 0..n * n {
            let (ux, uy) = (hats[0][i].re, hats[1][i].re);
            w[0][i] = Complex64::new(ux * hats[2][i].re + uy * hats[3][i].re, 0.0);
            w[1][i] = Complex64::new(ux * hats[4][i].re + uy * hats[5][i].re, 0.0);
        }
        let norm = 1.0 / (n * n) as f64;
        for c in w.iter_mut() {
            self.fft2(c, &self.forward);
        }
        let coeffs = self
            .basis
            .modes()
            .iter()
            .enumerate()
            .map(|(j, mode)| {
                if j >= m {
                    return 0.0;
                }
                let idx = self.wrap(mode.wave.kx) * n + self.wrap(mode.wave.ky);
                project_coefficient(mode, [w[0][idx] * norm, w[1][idx] * norm])
            })
            .collect();
        SpectralField::from_coeffs(u.basis().clone(), coeffs)
    }
}

impl SpectralField {
    pub fn nonlinear_term_with(&self, m: usize, backend: NonlinearBackend) -> Result<SpectralField, SpectralError> {
        match backend {
            NonlinearBackend::Convolution => self.nonlinear_term(m),
            NonlinearBackend::Collocation => Collocation::new(self.basis().clone()).apply(self, m),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn random_field(n: usize, seed: u64) -> SpectralField {
        let b = Basis::new(n).unwrap();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let c = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        SpectralField::from_coeffs(b, c).unwrap()
    }

    #[test]
    fn shear_mode_is_a_steady_state() {
        let b = Basis::new(4).unwrap();
        let j = b.position(WaveVector { kx: 1, ky: 0 }, Phase::Cosine).unwrap();
        let mut c = vec![0.0; 4];
        c[j] = 3.0;
        let u = SpectralField::from_coeffs(b, c).unwrap();
        assert!(u.nonlinear_term(4).unwrap().coeffs().iter().all(|&x| x == 0.0));
        let z = SpectralField::zeros(Basis::new(10).unwrap());
        assert!(z.nonlinear_term(10).unwrap().coeffs().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn energy_orthogonality() {
        for seed in 0..20 {
            let u = random_field(8, seed);
            let b = u.nonlinear_term(8).unwrap();
            let scale = u.norm(0.0) * u.norm(1.0) * u.norm(0.0);
            assert!(b.inner(&u).abs() <= 1e-12 * scale, "seed {seed}");
        }
    }

    #[test]
    fn collocation_matches_convolution() {
        for (n, seed) in [(8, 1), (16, 2), (33, 3), (64, 4)] {
            let u = random_field(n, seed);
            let a = u.nonlinear_term(n).unwrap();
            let b = u.nonlinear_term_with(n, NonlinearBackend::Collocation).unwrap();
            for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                assert!((x - y).abs() < 1e-8, "n={n}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn tensor_is_antisymmetric_in_output_and_advected_index() {
        let b = Basis::new(24).unwrap();
        let t = b.triads();
        assert!(t.nnz() > 0);
        let mut dense = vec![0.0; 24 * 24 * 24];
        for j in 0..24 {
            for &(a, bb, c) in &t.entries[t.row_start[j]..t.row_start[j + 1]] {
                dense[(j * 24 + a as usize) * 24 + bb as usize] = c;
            }
        }
        for j in 0..24 {
            for a in 0..24 {
                for k in 0..24 {
                    let x = dense[(j * 24 + a) * 24 + k];
                    let y = dense[(k * 24 + a) * 24 + j];
                    assert!((x + y).abs() < 1e-10, "C[{j},{a},{k}]={x}, C[{k},{a},{j}]={y}");
                }
            }
        }
    }
}
