use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory.
    pub path: PathBuf,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultManifest {
    pub model_hash: String,
    pub artifacts: Vec<Artifact>,
    pub diagnostics: BTreeMap<String, serde_json::Value>,
    pub jobs: Vec<JobRecord>,
}

impl ResultManifest {
    pub fn failed(&self) -> usize {
        self.jobs.iter().filter(|j| !j.ok).count()
    }

    pub fn add(&mut self, path: impl Into<PathBuf>, role: &str) {
        let a = Artifact {
            path: path.into(),
            role: role.to_string(),
        };
        if !self.artifacts.contains(&a) {
            self.artifacts.push(a);
        }
    }

    /// Writes `manifest.json` into `dir`; the manifest lists itself.
    pub fn write(&mut self, dir: &Path) -> Result<PathBuf> {
        self.add(MANIFEST_FILE, "manifest");
        self.artifacts.sort();
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
        Ok(path)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }
}
