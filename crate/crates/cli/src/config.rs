//! Run configuration: TOML file, environment and `key=value` overrides.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tubecond::conductivity::OmegaGrid;
use tubecond::kubo::{PropagationOptions, Scheme};
use tubecond::many_body::ModelParams;
use tubecond::potential::{CylinderGeometry, PeriodicPotentialSpec};
use tubecond::spectral::{SolverOptions, SpectrumOptions, StateSelection};

use crate::error::{CliError, Result};

/// Environment variable replacing `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "TUBECOND_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Spectrum,
    Sweep,
    Lines,
    OracleCompare,
    ConvergenceStudy,
}

impl JobKind {
    pub fn name(self) -> &'static str {
        match self {
            JobKind::Spectrum => "spectrum",
            JobKind::Sweep => "sweep",
            JobKind::Lines => "lines",
            JobKind::OracleCompare => "oracle_compare",
            JobKind::ConvergenceStudy => "convergence_study",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub r: f64,
    pub a: f64,
    #[serde(rename = "L")]
    pub cells: usize,
    #[serde(rename = "N")]
    pub n_electrons: usize,
    pub lambda: f64,
    #[serde(rename = "M_modes")]
    pub m_modes: usize,
    /// Pair-kernel Fourier cutoff; `2·M_modes` when absent.
    #[serde(rename = "M_fourier", default, skip_serializing_if = "Option::is_none")]
    pub m_fourier: Option<usize>,
    #[serde(default = "one")]
    pub eps: f64,
    #[serde(default = "one")]
    pub charge: f64,
    /// Harmonic index (period `a`) to cosine coefficient.
    #[serde(default)]
    pub v_per: BTreeMap<String, f64>,
}

fn one() -> f64 {
    1.0
}

impl ModelSection {
    pub fn params(&self) -> Result<ModelParams> {
        let mut fourier_coeffs = BTreeMap::new();
        for (k, &c) in &self.v_per {
            let j: i64 = k
                .trim()
                .parse()
                .map_err(|_| CliError::Validation(format!("model.v_per key {k:?} is not an integer harmonic index")))?;
            fourier_coeffs.insert(j, c);
        }
        let p = ModelParams {
            geometry: CylinderGeometry {
                radius: self.r,
                period: self.a,
                cells: self.cells,
                permittivity: self.eps,
                charge: self.charge,
            },
            n_electrons: self.n_electrons,
            lambda: self.lambda,
            v_per: PeriodicPotentialSpec { fourier_coeffs },
            m_modes: self.m_modes,
        };
        p.validate().map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(p)
    }

    pub fn fourier_cutoff(&self) -> usize {
        self.m_fourier.unwrap_or(2 * self.m_modes)
    }

    /// Stable content hash of this section.
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("model section serializes"))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Adaptive,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub selection: Selection,
    pub weight_tail: f64,
    pub solver_tol: f64,
    pub dense_threshold: usize,
    pub basis_budget: Option<u64>,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        let s = SolverOptions::default();
        Self {
            selection: Selection::Adaptive,
            weight_tail: 1e-8,
            solver_tol: s.tol,
            dense_threshold: s.dense_threshold,
            basis_budget: None,
        }
    }
}

impl SpectrumSection {
    pub fn options(&self, selection: Selection) -> SpectrumOptions {
        SpectrumOptions {
            selection: match selection {
                Selection::All => StateSelection::All,
                Selection::Adaptive => StateSelection::Adaptive {
                    weight_tail: self.weight_tail,
                },
            },
            solver: SolverOptions {
                tol: self.solver_tol,
                dense_threshold: self.dense_threshold,
                ..Default::default()
            },
            basis_budget: self.basis_budget.map(u128::from),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinesSection {
    /// Lines with smaller dipole weight are dropped.
    pub threshold: f64,
}

impl Default for LinesSection {
    fn default() -> Self {
        Self { threshold: 1e-14 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Extra inverse temperatures, one curve each.
    pub betas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    /// Frequencies to compare; five points around the first line when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omegas: Option<Vec<f64>>,
    /// Inverse temperature in units of `1/gap`, used when `beta` is unset.
    pub beta_gap_units: f64,
    pub e_step: f64,
    pub scheme: Scheme,
    pub dt_factor: f64,
    pub richardson: bool,
}

impl Default for OracleSection {
    fn default() -> Self {
        let p = PropagationOptions::default();
        Self {
            omegas: None,
            beta_gap_units: 20.0,
            e_step: 1e-4,
            scheme: p.scheme,
            dt_factor: p.dt_factor,
            richardson: p.richardson,
        }
    }
}

impl OracleSection {
    pub fn propagation(&self) -> PropagationOptions {
        PropagationOptions {
            scheme: self.scheme,
            dt_factor: self.dt_factor,
            richardson: self.richardson,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceSection {
    /// Number of cutoff levels, each doubling `M_modes` and `M_fourier`.
    pub levels: usize,
    /// Number of time-step levels, each halving `dt`.
    pub dt_levels: usize,
    /// Three frequencies; `{0.5, 1, 2}·gap` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omegas: Option<Vec<f64>>,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        Self {
            levels: 3,
            dt_levels: 3,
            omegas: None,
        }
    }
}

fn default_jobs() -> Vec<JobKind> {
    vec![JobKind::Spectrum, JobKind::Sweep, JobKind::Lines]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("tubecond-out")
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default = "default_jobs")]
    pub jobs: Vec<JobKind>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Run jobs one after another instead of concurrently.
    #[serde(default = "yes")]
    pub deterministic: bool,
    pub model: ModelSection,
    #[serde(default)]
    pub omega_grid: OmegaGrid,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub lines: LinesSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub convergence: ConvergenceSection,
}

impl RunConfig {
    /// Parses TOML text and applies `key=value` overrides (dotted keys).
    pub fn from_toml(text: &str, origin: &Path, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                table.insert("output_dir".into(), toml::Value::String(dir));
            }
        }
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| CliError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.params()?;
        if self.model.lambda != 0.0 && self.model.n_electrons > 1 && self.model.fourier_cutoff() < 2 * self.model.m_modes {
            return Err(CliError::Validation(format!(
                "model.M_fourier = {} must be at least 2·M_modes = {}",
                self.model.fourier_cutoff(),
                2 * self.model.m_modes
            )));
        }
        self.omega_grid.validate().map_err(|e| CliError::Validation(e.to_string()))?;
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(CliError::Validation(format!("eta must be > 0, got {}", self.eta)));
        }
        for &b in self.beta.iter().chain(&self.sweep.betas) {
            if !(b > 0.0) || !b.is_finite() {
                return Err(CliError::Validation(format!("beta must be > 0, got {b}")));
            }
        }
        if self.jobs.is_empty() {
            return Err(CliError::Validation("jobs must not be empty".into()));
        }
        let o = &self.oracle;
        if !(o.e_step > 0.0 && o.e_step <= 1.0) {
            return Err(CliError::Validation(format!("oracle.e_step must lie in (0, 1], got {}", o.e_step)));
        }
        if !(o.dt_factor > 0.0) || !(o.beta_gap_units > 0.0) {
            return Err(CliError::Validation("oracle.dt_factor and oracle.beta_gap_units must be > 0".into()));
        }
        if let Some(ws) = &o.omegas {
            if ws.is_empty() || ws.iter().any(|&w| !(w > 0.0)) {
                return Err(CliError::Validation("oracle.omegas must be non-empty and > 0".into()));
            }
        }
        let c = &self.convergence;
        if c.levels < 1 || c.dt_levels < 1 {
            return Err(CliError::Validation("convergence.levels and convergence.dt_levels must be >= 1".into()));
        }
        if let Some(ws) = &c.omegas {
            if ws.len() != 3 || ws.iter().any(|&w| !(w > 0.0)) {
                return Err(CliError::Validation("convergence.omegas must hold three values > 0".into()));
            }
        }
        if self.spectrum.weight_tail <= 0.0 || self.spectrum.solver_tol <= 0.0 {
            return Err(CliError::Validation("spectrum.weight_tail and spectrum.solver_tol must be > 0".into()));
        }
        Ok(())
    }

    /// Creates `output_dir` and checks that it accepts files.
    pub fn prepare_output_dir(&self) -> Result<()> {
        let dir = &self.output_dir;
        let denied = |e| CliError::Validation(format!("output_dir {} is not writable: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(denied)?;
        let probe = dir.join(".tubecond-probe");
        fs::write(&probe, b"").map_err(denied)?;
        fs::remove_file(&probe).map_err(denied)?;
        Ok(())
    }

    /// Fully resolved config, defaults included.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    RunConfig::from_toml(&text, path, overrides)
}

/// `a.b.c=value`. The value is read as a TOML literal, or as a bare string.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Validation(format!("override {spec:?} is not of the form key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Validation(format!("override key {key:?} is malformed")));
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let (last, parents) = path.split_last().expect("non-empty key");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Validation(format!("override {key:?}: {p} is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
