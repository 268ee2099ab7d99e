use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use super::nonlinear::TriadTensor;
use super::SpectralError;

/// Fourier lattice index on the unit torus, stored in canonical half-lattice
/// form so that each line `{k, -k}` appears exactly once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WaveVector {
    pub kx: i64,
    pub ky: i64,
}

impl WaveVector {
    /// Returns `None` for the zero vector or a vector outside the canonical
    /// half-lattice (`ky > 0`, or `ky == 0 && kx > 0`).
    pub fn new(kx: i64, ky: i64) -> Option<Self> {
        if ky > 0 || (ky == 0 && kx > 0) {
            Some(Self { kx, ky })
        } else {
            None
        }
    }

    /// Canonical representative of the line through `(kx, ky)` together with
    /// the sign relating them, or `None` for the origin.
    pub fn canonicalize(kx: i64, ky: i64) -> Option<(Self, i64)> {
        if let Some(k) = Self::new(kx, ky) {
            Some((k, 1))
        } else {
            Self::new(-kx, -ky).map(|k| (k, -1))
        }
    }

    pub fn norm_squared(&self) -> i64 {
        self.kx * self.kx + self.ky * self.ky
    }

    /// Integer vector orthogonal to the wave vector, `(-ky, kx)`.
    pub fn perp(&self) -> (i64, i64) {
        (-self.ky, self.kx)
    }

    pub fn max_component(&self) -> i64 {
        self.kx.abs().max(self.ky.abs())
    }
}

impl fmt::Display for WaveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.kx, self.ky)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Cosine,
    Sine,
}

impl Phase {
    pub fn code(&self) -> char {
        match self {
            Phase::Cosine => 'c',
            Phase::Sine => 's',
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        match s {
            "c" => Some(Phase::Cosine),
            "s" => Some(Phase::Sine),
            _ => None,
        }
    }
}

/// One real eigenfunction of the Stokes operator,
/// `e(x) = sqrt(2) * direction * cos(2 pi k.x)` or the sine counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMode {
    /// 1-based position in the ordered basis.
    pub index: usize,
    pub wave: WaveVector,
    pub phase: Phase,
    pub eigenvalue: f64,
    pub direction: [f64; 2],
}

impl BasisMode {
    fn new(index: usize, wave: WaveVector, phase: Phase) -> Self {
        let (px, py) = wave.perp();
        let len = (wave.norm_squared() as f64).sqrt();
        Self {
            index,
            wave,
            phase,
            eigenvalue: 4.0 * PI * PI * wave.norm_squared() as f64,
            direction: [px as f64 / len, py as f64 / len],
        }
    }

    /// Velocity of this mode at `x`.
    pub fn value_at(&self, x: [f64; 2]) -> [f64; 2] {
        let arg = 2.0 * PI * (self.wave.kx as f64 * x[0] + self.wave.ky as f64 * x[1]);
        let s = std::f64::consts::SQRT_2
            * match self.phase {
                Phase::Cosine => arg.cos(),
                Phase::Sine => arg.sin(),
            };
        [s * self.direction[0], s * self.direction[1]]
    }
}

/// The first `n` Stokes eigenmodes, ordered by eigenvalue, then
/// lexicographically by `(kx, ky)`, then cosine before sine.
pub struct Basis {
    modes: Vec<BasisMode>,
    triads: OnceLock<TriadTensor>,
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Basis").field("n", &self.len()).finish()
    }
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        self.modes == other.modes
    }
}

impl Basis {
    pub fn new(n: usize) -> Result<Arc<Self>, SpectralError> {
        if n == 0 {
            return Err(SpectralError::EmptyBasis);
        }
        // Every canonical wave vector contributes two modes; grow the disc
        // until the shell containing the n-th mode is fully enumerated.
        let mut radius = 1i64;
        let waves = loop {
            let mut waves = Vec::new();
            for ky in 0..=radius {
                for kx in -radius..=radius {
                    if let Some(k) = WaveVector::new(kx, ky) {
                        if k.norm_squared() <= radius * radius {
                            waves.push(k);
                        }
                    }
                }
            }
            if 2 * waves.len() >= n {
                break waves;
            }
            radius += 1;
        };
        let mut waves = waves;
        waves.sort_by_key(|k| (k.norm_squared(), k.kx, k.ky));
        let modes = waves
            .iter()
            .flat_map(|&k| [(k, Phase::Cosine), (k, Phase::Sine)])
            .take(n)
            .enumerate()
            .map(|(i, (k, p))| BasisMode::new(i + 1, k, p))
            .collect();
        Ok(Arc::new(Self { modes, triads: OnceLock::new() }))
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[BasisMode] {
        &self.modes
    }

    /// Mode by 1-based index.
    pub fn mode(&self, j: usize) -> &BasisMode {
        &self.modes[j - 1]
    }

    pub fn eigenvalues(&self) -> impl Iterator<Item = f64> + '_ {
        self.modes.iter().map(|m| m.eigenvalue)
    }

    /// Smallest eigenvalue, `4 pi^2`.
    pub fn lambda_1(&self) -> f64 {
        self.modes[0].eigenvalue
    }

    pub fn max_wavenumber(&self) -> i64 {
        self.modes.iter().map(|m| m.wave.max_component()).max().unwrap_or(0)
    }

    /// 0-based position of `(wave, phase)` if it is part of this basis.
    pub fn position(&self, wave: WaveVector, phase: Phase) -> Option<usize> {
        self.modes.iter().position(|m| m.wave == wave && m.phase == phase)
    }

    pub(crate) fn triads(&self) -> &TriadTensor {
        self.triads.get_or_init(|| TriadTensor::build(self))
    }
}
