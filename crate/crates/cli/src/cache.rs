//! On-disk spectrum cache, one JSON file per model and solver setting.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tubecond::spectral::{ModelSpectrum, SpectrumOptions};
use tubecond::{ModelParams, PairKernelTable};

use crate::config::sha256_hex;
use crate::error::{CliError, Result};

pub const CACHE_DIR: &str = "cache";

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    spectrum: ModelSpectrum,
}

#[derive(Debug, Clone)]
pub struct Cached {
    pub spectrum: ModelSpectrum,
    pub path: PathBuf,
    pub hit: bool,
}

pub fn cache_key(params: &ModelParams, m_fourier: usize, opts: &SpectrumOptions) -> String {
    let body = serde_json::json!({ "params": params, "m_fourier": m_fourier, "options": opts });
    sha256_hex(body.to_string().as_bytes())
}

/// Loads the spectrum for `key` from `dir`, or computes and stores it.
pub fn load_or_compute(
    dir: &Path,
    params: &ModelParams,
    m_fourier: usize,
    opts: &SpectrumOptions,
) -> Result<Cached> {
    let key = cache_key(params, m_fourier, opts);
    let path = dir.join(format!("spectrum-{}.json", &key[..16]));
    if let Ok(text) = fs::read_to_string(&path) {
        match serde_json::from_str::<Entry>(&text) {
            Ok(e) if e.key == key => {
                log::info!("spectrum cache hit: {}", path.display());
                return Ok(Cached {
                    spectrum: e.spectrum,
                    path,
                    hit: true,
                });
            }
            Ok(_) => log::warn!("cache key mismatch in {}, recomputing", path.display()),
            Err(e) => log::warn!("unreadable cache file {}: {e}", path.display()),
        }
    }
    let kernel = PairKernelTable::build(&params.geometry, m_fourier)?;
    let spectrum = ModelSpectrum::compute(params, &kernel, opts)?;
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    let entry = Entry { key, spectrum };
    let text = serde_json::to_string(&entry).expect("spectrum serializes");
    fs::write(&path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    Ok(Cached {
        spectrum: entry.spectrum,
        path,
        hit: false,
    })
}
