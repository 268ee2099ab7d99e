//! Run configuration: a sectioned TOML file, validated into library types.
//!
//! ```toml
//! [spectral]
//! n = 32
//!
//! [noise]
//! enabled = true            # false switches the forcing off
//! family = "stable"         # or "truncated" (needs `radius`)
//! alpha = 1.5
//! intensity = 1.0
//! theta = 1.0
//! beta_power = 2.0          # beta_j = j^-beta_power; or `betas = [..]`
//! backend = "exact"         # or "levy-ito" (needs `cutoff`)
//!
//! [solver]
//! dt = 1e-3
//! T = 8.0
//! scheme = "exponential-euler"   # or "semi-implicit-euler"
//! seed = 42
//! snapshot_stride = 100
//! initial = { kind = "random-sobolev", gamma = 1.0, norm = 1.0 }
//!
//! [diagnostics]
//! trajectories = 256
//! horizons = [1, 2, 4, 8]
//! affine_from = 2.0
//! mode = 1
//! xi = [0.5, 1, 2]
//! pairs = [[0, 0.5], [0.5, 1]]
//!
//! [invariant]
//! trajectories = 128
//! burn_in = 4.0
//! windows = [[4, 8], [8, 12]]
//! observables = ["l2", "h1theta", "mode:1"]
//! ```
//!
//! Initial conditions: `{ kind = "zero" }`,
//! `{ kind = "single-mode", k = [1, 0], phase = "cos", amplitude = 1.0 }`,
//! `{ kind = "random-sobolev", gamma, norm }` and
//! `{ kind = "snapshot", path = "field.csv" }` (relative to the config file).

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use levy_ns::invariant::Observable;
use levy_ns::levy::{CoefficientSequence, HTheta, LevyMeasureSpec, LevyNoiseSpec, NoiseBackend};
use levy_ns::solver::{InitialCondition, Scheme, SolverConfig};
use levy_ns::spectral::snapshot::read_snapshot;
use levy_ns::spectral::{Basis, Phase, WaveVector};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    spectral: Option<RawSpectral>,
    noise: Option<RawNoise>,
    solver: Option<RawSolver>,
    diagnostics: Option<RawDiagnostics>,
    invariant: Option<RawInvariant>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectral {
    n: Option<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    enabled: Option<bool>,
    family: Option<String>,
    alpha: Option<f64>,
    intensity: Option<f64>,
    radius: Option<f64>,
    theta: Option<f64>,
    beta_power: Option<f64>,
    betas: Option<Vec<f64>>,
    backend: Option<String>,
    cutoff: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    dt: Option<f64>,
    #[serde(rename = "T")]
    horizon: Option<f64>,
    scheme: Option<String>,
    seed: Option<u64>,
    snapshot_stride: Option<i64>,
    initial: Option<RawInitial>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    kind: String,
    k: Option<[i64; 2]>,
    phase: Option<String>,
    amplitude: Option<f64>,
    gamma: Option<f64>,
    norm: Option<f64>,
    path: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiagnostics {
    trajectories: Option<usize>,
    horizons: Option<Vec<f64>>,
    affine_from: Option<f64>,
    mode: Option<usize>,
    xi: Option<Vec<f64>>,
    pairs: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInvariant {
    trajectories: Option<usize>,
    burn_in: Option<f64>,
    stride: Option<usize>,
    windows: Option<Vec<[f64; 2]>>,
    observables: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsSettings {
    pub trajectories: usize,
    pub horizons: Vec<f64>,
    pub affine_from: f64,
    pub mode: usize,
    pub xi: Vec<f64>,
    pub pairs: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantSettings {
    pub trajectories: usize,
    pub burn_in: f64,
    pub stride: Option<usize>,
    pub windows: Vec<(f64, f64)>,
    pub observables: Vec<Observable>,
}

/// A validated configuration with its provenance.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub diagnostics: DiagnosticsSettings,
    pub invariant: InvariantSettings,
    /// SHA-256 of the config text and any seed override.
    pub hash: String,
    pub h_theta: Option<HTheta>,
    /// `||phi||_0`.
    pub initial_norm: f64,
    pub warnings: Vec<String>,
}

pub fn config_hash(text: &str, seed_override: Option<u64>) -> String {
    let mut h = Sha256::new();
    h.update(text.as_bytes());
    if let Some(s) = seed_override {
        h.update(format!("\nseed-override={s}\n").as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load(path: &Path, seed_override: Option<u64>) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    parse(&text, path.parent().unwrap_or(Path::new(".")), seed_override)
}

/// Parses and validates config text; relative snapshot paths resolve against `base`.
pub fn parse(text: &str, base: &Path, seed_override: Option<u64>) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let mut v = Validator::default();
    let mut config = v.build(raw, base, seed_override);
    if let Some(c) = config.as_mut() {
        c.hash = config_hash(text, seed_override);
    }
    match config {
        Some(c) if v.errors.is_empty() => Ok(c),
        _ => Err(ConfigError::Invalid(v.errors)),
    }
}

#[derive(Default)]
struct Validator {
    errors: Vec<String>,
}

impl Validator {
    fn fail(&mut self, field: &str, rule: impl AsRef<str>) {
        self.errors.push(format!("{field}: {}", rule.as_ref()));
    }

    fn require<T>(&mut self, value: Option<T>, field: &str) -> Option<T> {
        if value.is_none() {
            self.fail(field, "is required");
        }
        value
    }

    fn check(&mut self, ok: bool, field: &str, rule: &str) -> bool {
        if !ok {
            self.fail(field, rule);
        }
        ok
    }

    fn build(&mut self, raw: RawConfig, base: &Path, seed_override: Option<u64>) -> Option<RunConfig> {
        let n = self
            .require(raw.spectral.and_then(|s| s.n), "spectral.n")
            .filter(|&n| self.check(n >= 1, "spectral.n", "must be at least 1"))
            .map(|n| n as usize);
        let solver = raw.solver;
        if solver.is_none() {
            self.fail("solver", "section is required");
        }
        let solver = solver?;
        let dt = self.require(solver.dt, "solver.dt").filter(|&dt| self.check(dt > 0.0 && dt.is_finite(), "solver.dt", "must be positive"));
        let horizon = self
            .require(solver.horizon, "solver.T")
            .filter(|&t| self.check(t >= 0.0 && t.is_finite(), "solver.T", "must be nonnegative"));
        if let (Some(dt), Some(t)) = (dt, horizon) {
            let steps = t / dt;
            self.check((steps - steps.round()).abs() <= 1e-6 * steps.max(1.0), "solver.T", "must be a whole number of steps dt");
        }
        let scheme = match solver.scheme.as_deref().unwrap_or("exponential-euler") {
            "exponential-euler" => Some(Scheme::ExponentialEuler),
            "semi-implicit-euler" => Some(Scheme::SemiImplicitEuler),
            other => {
                self.fail("solver.scheme", format!("unknown scheme '{other}' (exponential-euler, semi-implicit-euler)"));
                None
            }
        };
        let stride = solver.snapshot_stride.unwrap_or(1);
        self.check(stride >= 1, "solver.snapshot_stride", "must be at least 1");
        let seed = seed_override.or(solver.seed).unwrap_or(0);
        let initial = self.initial(solver.initial, base);

        let (noise, theta, h_theta) = self.noise(raw.noise, n);
        let (n, dt, horizon, scheme, initial) = (n?, dt?, horizon?, scheme?, initial?);
        let mut config = SolverConfig { seed, snapshot_stride: stride.max(1) as usize, scheme, ..SolverConfig::deterministic(n, dt, horizon, initial) };
        config.theta = theta;
        config.noise = noise;
        let basis = Basis::new(n).ok()?;
        let initial_norm = match config.initial_field(&basis) {
            Ok(f) => f.norm(0.0),
            Err(e) => {
                self.fail("solver.initial", e.to_string());
                return None;
            }
        };
        let mut warnings = Vec::new();
        let lambda_n = basis.mode(n).eigenvalue;
        if scheme == Scheme::SemiImplicitEuler && dt > 0.5 / lambda_n {
            warnings.push(format!(
                "solver.dt = {dt} exceeds 0.5 / lambda_n = {:.3e}; the semi-implicit scheme damps the highest modes heavily",
                0.5 / lambda_n
            ));
        }
        let diagnostics = self.diagnostics(raw.diagnostics.unwrap_or_default(), &config);
        let invariant = self.invariant(raw.invariant.unwrap_or_default(), &config);
        Some(RunConfig {
            solver: config,
            diagnostics: diagnostics?,
            invariant: invariant?,
            hash: String::new(),
            h_theta,
            initial_norm,
            warnings,
        })
    }

    fn initial(&mut self, raw: Option<RawInitial>, base: &Path) -> Option<InitialCondition> {
        let Some(raw) = raw else { return Some(InitialCondition::Zero) };
        let field = "solver.initial";
        match raw.kind.as_str() {
            "zero" => Some(InitialCondition::Zero),
            "single-mode" => {
                let [kx, ky] = self.require(raw.k, "solver.initial.k")?;
                let wave = WaveVector::new(kx, ky);
                self.check(wave.is_some(), "solver.initial.k", "must be a nonzero wave vector with ky > 0, or ky = 0 and kx > 0");
                let phase = match raw.phase.as_deref().unwrap_or("cos") {
                    "cos" | "c" => Some(Phase::Cosine),
                    "sin" | "s" => Some(Phase::Sine),
                    other => {
                        self.fail("solver.initial.phase", format!("unknown phase '{other}' (cos, sin)"));
                        None
                    }
                };
                let amplitude = raw.amplitude.unwrap_or(1.0);
                self.check(amplitude.is_finite(), "solver.initial.amplitude", "must be finite");
                Some(InitialCondition::SingleMode { wave: wave?, phase: phase?, amplitude })
            }
            "random-sobolev" => {
                let gamma = raw.gamma.unwrap_or(0.0);
                let norm = self.require(raw.norm, "solver.initial.norm")?;
                self.check(gamma.is_finite(), "solver.initial.gamma", "must be finite");
                self.check(norm >= 0.0 && norm.is_finite(), "solver.initial.norm", "must be nonnegative").then_some(())?;
                Some(InitialCondition::RandomSobolev { gamma, norm })
            }
            "snapshot" => {
                let path = base.join(self.require(raw.path, "solver.initial.path")?);
                let read = fs::File::open(&path)
                    .map_err(|e| e.to_string())
                    .and_then(|f| read_snapshot(BufReader::new(f)).map_err(|e| e.to_string()));
                match read {
                    Ok(s) => Some(InitialCondition::Field(s.field)),
                    Err(e) => {
                        self.fail("solver.initial.path", format!("cannot load {}: {e}", path.display()));
                        None
                    }
                }
            }
            other => {
                self.fail(field, format!("unknown kind '{other}' (zero, single-mode, random-sobolev, snapshot)"));
                None
            }
        }
    }

    fn noise(&mut self, raw: Option<RawNoise>, n: Option<usize>) -> (Option<LevyNoiseSpec>, f64, Option<HTheta>) {
        let Some(raw) = raw else { return (None, 1.0, None) };
        let theta = raw.theta.unwrap_or(1.0);
        let theta_ok = self.check(theta > 0.0 && theta <= 1.0, "noise.theta", "must lie in (0, 1]");
        if !raw.enabled.unwrap_or(true) {
            return (None, theta, None);
        }
        let alpha = self.require(raw.alpha, "noise.alpha");
        let alpha_ok = alpha.is_some_and(|a| self.check(a > 0.0 && a < 2.0, "noise.alpha", "must lie in (0, 2)"));
        let intensity = raw.intensity.unwrap_or(1.0);
        let intensity_ok = self.check(intensity > 0.0 && intensity.is_finite(), "noise.intensity", "must be positive");
        let family = raw.family.as_deref().unwrap_or("stable");
        let measure = match family {
            "stable" => alpha_ok.then(|| LevyMeasureSpec::stable(alpha.unwrap(), intensity)),
            "truncated" => {
                let radius = self.require(raw.radius, "noise.radius");
                let radius_ok = radius.is_some_and(|r| self.check(r > 0.0 && r.is_finite(), "noise.radius", "must be positive"));
                (alpha_ok && radius_ok).then(|| LevyMeasureSpec::truncated(alpha.unwrap(), intensity, radius.unwrap()))
            }
            other => {
                self.fail("noise.family", format!("unknown family '{other}' (stable, truncated)"));
                None
            }
        };
        let measure = if intensity_ok { measure.and_then(Result::ok) } else { None };

        let betas = match (raw.beta_power, raw.betas) {
            (Some(_), Some(_)) => {
                self.fail("noise.betas", "give either beta_power or betas, not both");
                None
            }
            (None, None) => {
                self.fail("noise.beta_power", "one of beta_power or betas is required");
                None
            }
            (Some(r), None) => self
                .check(r.is_finite() && r >= 0.0, "noise.beta_power", "must be nonnegative")
                .then_some(CoefficientSequence::Power(r)),
            (None, Some(b)) => {
                let ok = self.check(b.iter().all(|x| x.is_finite() && *x >= 0.0), "noise.betas", "must be finite and nonnegative");
                if let Some(n) = n {
                    self.check(b.len() >= n, "noise.betas", &format!("needs at least spectral.n = {n} entries, got {}", b.len()));
                }
                ok.then_some(CoefficientSequence::Explicit(b))
            }
        };
        let backend = match raw.backend.as_deref().unwrap_or("exact") {
            "exact" => {
                if family == "truncated" {
                    self.fail("noise.backend", "the exact backend needs the untruncated stable family; use levy-ito");
                    None
                } else {
                    Some(NoiseBackend::Exact)
                }
            }
            "levy-ito" => {
                let cutoff = self.require(raw.cutoff, "noise.cutoff");
                cutoff
                    .filter(|&c| self.check(c > 0.0 && c <= 1.0, "noise.cutoff", "must lie in (0, 1]"))
                    .map(|cutoff| NoiseBackend::LevyIto { cutoff })
            }
            other => {
                self.fail("noise.backend", format!("unknown backend '{other}' (exact, levy-ito)"));
                None
            }
        };
        let (Some(measure), Some(betas), Some(backend), true) = (measure, betas, backend, theta_ok) else {
            return (None, theta, None);
        };
        let spec = match LevyNoiseSpec::new(measure, betas, theta, backend) {
            Ok(s) => s,
            Err(e) => {
                self.fail("noise", e.to_string());
                return (None, theta, None);
            }
        };
        match spec.h_theta() {
            Ok(h) => (Some(spec), theta, Some(h)),
            Err(e) => {
                let hint = if measure.radius().is_none() && theta >= measure.alpha { " (theta must be below alpha)" } else { "" };
                self.fail("noise.theta", format!("{e}{hint}"));
                (None, theta, None)
            }
        }
    }

    fn diagnostics(&mut self, raw: RawDiagnostics, c: &SolverConfig) -> Option<DiagnosticsSettings> {
        let t = c.horizon;
        let trajectories = raw.trajectories.unwrap_or(256);
        self.check(trajectories >= 1, "diagnostics.trajectories", "must be at least 1");
        let horizons = raw.horizons.unwrap_or_else(|| if t > 0.0 { vec![t] } else { Vec::new() });
        self.check(
            horizons.iter().all(|&h| h > 0.0 && h <= t + 1e-12),
            "diagnostics.horizons",
            "must lie in (0, T]",
        );
        let affine_from = raw.affine_from.unwrap_or(0.0);
        self.check(affine_from >= 0.0, "diagnostics.affine_from", "must be nonnegative");
        let mode = raw.mode.unwrap_or(1);
        self.check((1..=c.n).contains(&mode), "diagnostics.mode", &format!("must lie in 1..={}", c.n));
        let xi = raw.xi.unwrap_or_else(|| vec![0.5, 1.0, 2.0, 4.0]);
        self.check(!xi.is_empty() && xi.iter().all(|x| x.is_finite()), "diagnostics.xi", "must be a nonempty list of finite values");
        let default_pairs = if t > 0.0 { vec![(0.0, t / 2.0), (t / 2.0, t)] } else { Vec::new() };
        let pairs: Vec<(f64, f64)> = raw.pairs.map_or(default_pairs, |p| p.into_iter().map(|[s, u]| (s, u)).collect());
        self.check(
            pairs.iter().all(|&(s, u)| 0.0 <= s && s < u && u <= t + 1e-12),
            "diagnostics.pairs",
            "each pair s:t must satisfy 0 <= s < t <= T",
        );
        Some(DiagnosticsSettings { trajectories, horizons, affine_from, mode, xi, pairs })
    }

    fn invariant(&mut self, raw: RawInvariant, c: &SolverConfig) -> Option<InvariantSettings> {
        let t = c.horizon;
        let trajectories = raw.trajectories.unwrap_or(128);
        self.check(trajectories >= 1, "invariant.trajectories", "must be at least 1");
        let burn_in = raw.burn_in.unwrap_or(t / 2.0);
        self.check(burn_in >= 0.0 && (burn_in < t || t == 0.0), "invariant.burn_in", "must lie in [0, T)");
        if let Some(s) = raw.stride {
            self.check(s >= 1, "invariant.stride", "must be at least one step");
        }
        let windows: Vec<(f64, f64)> = raw.windows.unwrap_or_default().into_iter().map(|[a, b]| (a, b)).collect();
        self.check(
            windows.iter().all(|&(a, b)| a >= burn_in && a < b && b <= t + 1e-12),
            "invariant.windows",
            "each window a:b must satisfy burn_in <= a < b <= T",
        );
        let mut observables = Vec::new();
        for name in raw.observables.unwrap_or_else(|| vec!["l2".into()]) {
            match name.parse::<Observable>() {
                Ok(o) => observables.push(o),
                Err(e) => self.fail("invariant.observables", e.to_string()),
            }
        }
        Some(InvariantSettings { trajectories, burn_in, stride: raw.stride, windows, observables })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const VALID: &str = r#"
[spectral]
n = 32
[noise]
alpha = 1.5
theta = 1.0
beta_power = 2.0
[solver]
dt = 1e-3
T = 1
seed = 7
"#;

    fn parse_str(text: &str) -> Result<RunConfig, ConfigError> {
        parse(text, Path::new("."), None)
    }

    fn errors(text: &str) -> Vec<String> {
        match parse_str(text) {
            Err(ConfigError::Invalid(e)) => e,
            other => panic!("expected validation errors, got {other:?}"),
        }
    }

    #[test]
    fn valid_config_records_h_theta() {
        let c = parse_str(VALID).unwrap();
        let h = c.h_theta.unwrap();
        // 2c / (alpha - theta) = 4, plus zeta(2).
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((h.big_jump_moment - 4.0).abs() < 1e-12);
        assert!((h.coefficient_sum - zeta2).abs() < 1e-12);
        assert!((h.total() - 5.6449).abs() < 1e-4);
        assert_eq!(c.solver.seed, 7);
        assert_eq!(c.solver.steps(), 1000);
        assert_eq!(c.hash.len(), 64);
    }

    #[test]
    fn theta_outside_range_is_rejected() {
        let e = errors(&VALID.replace("theta = 1.0", "theta = 1.5"));
        assert!(e.iter().any(|m| m.starts_with("noise.theta") && m.contains("(0, 1]")), "{e:?}");
    }

    #[test]
    fn divergent_h_theta_is_rejected() {
        let e = errors(&VALID.replace("alpha = 1.5", "alpha = 0.8"));
        assert!(e.iter().any(|m| m.contains("H_theta diverges")), "{e:?}");
    }

    #[test]
    fn errors_are_aggregated() {
        let text = VALID.replace("n = 32", "n = 0").replace("dt = 1e-3", "dt = -1").replace("alpha = 1.5", "alpha = 3");
        let e = errors(&text);
        for field in ["spectral.n", "solver.dt", "noise.alpha"] {
            assert!(e.iter().any(|m| m.starts_with(field)), "{field} missing from {e:?}");
        }
    }

    #[test]
    fn zero_horizon_and_disabled_noise() {
        let c = parse_str(&VALID.replace("T = 1", "T = 0").replace("[noise]", "[noise]\nenabled = false")).unwrap();
        assert!(c.solver.noise.is_none());
        assert_eq!(c.solver.steps(), 0);
    }

    #[test]
    fn hash_tracks_text_and_seed_override() {
        let a = config_hash(VALID, None);
        assert_eq!(a, config_hash(VALID, None));
        assert_ne!(a, config_hash(VALID, Some(1)));
        assert_ne!(a, config_hash(&VALID.replace("seed = 7", "seed = 8"), None));
        let c = parse(VALID, Path::new("."), Some(99)).unwrap();
        assert_eq!(c.solver.seed, 99);
    }

    #[test]
    fn semi_implicit_warning() {
        let semi = VALID.replace("seed = 7", "seed = 7\nscheme = \"semi-implicit-euler\"");
        // lambda_32 = 4 pi^2 * 10, so the threshold is about 1.27e-3.
        assert!(parse_str(&semi).unwrap().warnings.is_empty());
        let c = parse_str(&semi.replace("dt = 1e-3", "dt = 2e-3")).unwrap();
        assert_eq!(c.warnings.len(), 1);
        let c = parse_str(VALID).unwrap();
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn initial_presets_parse() {
        let with = |init: &str| VALID.replace("seed = 7", &format!("seed = 7\ninitial = {init}"));
        let c = parse_str(&with(r#"{ kind = "single-mode", k = [1, 1], phase = "sin", amplitude = 2.0 }"#)).unwrap();
        assert_eq!(c.initial_norm, 2.0);
        let c = parse_str(&with(r#"{ kind = "random-sobolev", gamma = 1.0, norm = 5.0 }"#)).unwrap();
        assert!((c.initial_norm - 5.0).abs() < 1e-12);
        assert!(parse_str(&with(r#"{ kind = "single-mode", k = [40, 40] }"#)).is_err());
        assert!(parse_str(&with(r#"{ kind = "vortex" }"#)).is_err());
        assert!(parse_str(&with(r#"{ kind = "snapshot", path = "missing.csv" }"#)).is_err());
    }

    #[test]
    fn unknown_keys_are_parse_errors() {
        assert!(matches!(parse_str(&format!("{VALID}\n[extra]\nx = 1\n")), Err(ConfigError::Parse(_))));
    }
}
