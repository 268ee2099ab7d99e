//! Output files, CSV formatting and the run manifest.

use std::fs;
use std::io;
use std::path::{Component, Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use levy_ns::levy::HTheta;
use serde::Serialize;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Writes `contents` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("output");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

/// One CSV field. Floats use the shortest round-trip form, with an exponent
/// for very large or small magnitudes.
pub trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    fn cell(&self) -> String {
        format!("{self:?}")
    }
}

macro_rules! display_cell {
    ($($t:ty),*) => {
        $(impl Cell for $t {
            fn cell(&self) -> String {
                self.to_string()
            }
        })*
    };
}

display_cell!(usize, u64, bool, str, &str, String, levy_ns::invariant::Observable);

/// CSV text with a provenance comment line followed by one header row.
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(hash: Option<&str>, header: &[&str]) -> Self {
        let mut text = format!("# levy-ns {TOOL_VERSION} config_hash={}\n", hash.unwrap_or("none"));
        text.push_str(&header.join(","));
        text.push('\n');
        Self { text, columns: header.len() }
    }

    pub fn row(&mut self, fields: &[&dyn Cell]) {
        debug_assert_eq!(fields.len(), self.columns);
        let cells: Vec<String> = fields.iter().map(|f| f.cell()).collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HThetaRecord {
    pub big_jump_moment: f64,
    pub coefficient_sum: f64,
    pub total: f64,
}

impl From<HTheta> for HThetaRecord {
    fn from(h: HTheta) -> Self {
        Self { big_jump_moment: h.big_jump_moment, coefficient_sum: h.coefficient_sum, total: h.total() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub subcommand: String,
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    pub h_theta: Option<HThetaRecord>,
    pub started: String,
    pub finished: String,
    /// False when the run stopped before writing all its outputs.
    pub complete: bool,
    /// Paths relative to the output directory, in creation order.
    pub outputs: Vec<String>,
    pub trajectories: usize,
    pub flagged_trajectories: usize,
    pub warnings: Vec<String>,
}

/// One invocation: resolves output paths and records every file it writes.
pub struct Run {
    out_dir: PathBuf,
    manifest: RunManifest,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl Run {
    pub fn new(out_dir: &Path, subcommand: &str) -> Self {
        Self {
            out_dir: out_dir.to_path_buf(),
            manifest: RunManifest {
                tool: "levy-ns",
                tool_version: TOOL_VERSION,
                subcommand: subcommand.to_string(),
                config_hash: None,
                seed: None,
                h_theta: None,
                started: now(),
                finished: String::new(),
                complete: false,
                outputs: Vec::new(),
                trajectories: 0,
                flagged_trajectories: 0,
                warnings: Vec::new(),
            },
        }
    }

    pub fn manifest_mut(&mut self) -> &mut RunManifest {
        &mut self.manifest
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.out_dir.join(path)
        }
    }

    fn display_name(&self, path: &Path) -> String {
        let rel = if path.is_absolute() { path.strip_prefix(&self.out_dir).unwrap_or(path) } else { path };
        let parts: Vec<String> = rel
            .components()
            .filter(|c| !matches!(c, Component::CurDir))
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect();
        parts.join("/")
    }

    pub fn write(&mut self, path: &Path, contents: &[u8]) -> io::Result<()> {
        write_atomic(&self.resolve(path), contents)?;
        let name = self.display_name(path);
        if !self.manifest.outputs.contains(&name) {
            self.manifest.outputs.push(name);
        }
        Ok(())
    }

    pub fn record_trajectories(&mut self, total: usize, flagged: usize) {
        self.manifest.trajectories += total;
        self.manifest.flagged_trajectories += flagged;
    }

    pub fn flagged_fraction(&self) -> f64 {
        if self.manifest.trajectories == 0 {
            0.0
        } else {
            self.manifest.flagged_trajectories as f64 / self.manifest.trajectories as f64
        }
    }

    pub fn finish(mut self, complete: bool) -> io::Result<RunManifest> {
        self.manifest.complete = complete;
        self.manifest.finished = now();
        let json = serde_json::to_string_pretty(&self.manifest).map_err(io::Error::other)?;
        write_atomic(&self.out_dir.join(MANIFEST_NAME), format!("{json}\n").as_bytes())?;
        Ok(self.manifest)
    }
}
