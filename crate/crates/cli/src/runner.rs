//! Job orchestration: spectrum, curves, lines, oracle comparison and the
//! convergence study, all written below one output directory.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;
use tubecond::conductivity::{line_spectrum, sigma_finite_beta, sigma_leading, ConductivityCurve};
use tubecond::kubo::{finite_difference_conductivity, PropagationOptions};
use tubecond::spectral::{truncation_clean_cutoff, ModelSpectrum};
use tubecond::ModelParams;

use crate::cache::{self, Cached, CACHE_DIR};
use crate::config::{JobKind, RunConfig, Selection};
use crate::error::{CliError, Result};
use crate::manifest::{JobRecord, ResultManifest};

pub const CONFIG_ECHO_FILE: &str = "resolved_config.toml";

type Outputs = Vec<(PathBuf, &'static str)>;

struct Run<'a> {
    cfg: &'a RunConfig,
    params: ModelParams,
    dir: &'a Path,
    hash: String,
}

impl Run<'_> {
    fn spectrum(&self, selection: Selection) -> Result<Cached> {
        cache::load_or_compute(
            &self.dir.join(CACHE_DIR),
            &self.params,
            self.cfg.model.fourier_cutoff(),
            &self.cfg.spectrum.options(selection),
        )
    }

    fn csv(&self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let ctx = || format!("writing {}", path.display());
        let mut w = BufWriter::new(File::create(&path).map_err(|e| CliError::io(ctx(), e))?);
        body(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(ctx(), e))?;
        Ok(PathBuf::from(name))
    }

    fn beta(&self, spec: &ModelSpectrum) -> Result<f64> {
        match self.cfg.beta {
            Some(b) => Ok(b),
            None => Ok(self.cfg.oracle.beta_gap_units / gap(spec)?),
        }
    }

    fn job(&self, kind: JobKind, primary: &Cached, complete: impl Fn() -> Result<Cached>) -> Result<Outputs> {
        let spec = &primary.spectrum;
        match kind {
            JobKind::Spectrum => Ok(vec![(self.csv("spectrum.csv", |w| spec.write_csv(w))?, "spectrum")]),
            JobKind::Sweep => {
                let grid = self.cfg.omega_grid.points();
                let curve = ConductivityCurve::evaluate(spec, &grid, self.cfg.eta, self.cfg.beta, self.hash.clone())?;
                let mut out = vec![(self.csv("sweep.csv", |w| curve.write_csv(w))?, "sweep")];
                for (i, &b) in self.cfg.sweep.betas.iter().enumerate() {
                    let curve = ConductivityCurve::evaluate(spec, &grid, self.cfg.eta, Some(b), self.hash.clone())?;
                    out.push((self.csv(&format!("sweep_beta_{i}.csv"), |w| curve.write_csv(w))?, "sweep_beta"));
                }
                Ok(out)
            }
            JobKind::Lines => {
                let lines = line_spectrum(spec, self.cfg.lines.threshold);
                Ok(vec![(self.csv("lines.csv", |w| lines.write_csv(w))?, "lines")])
            }
            JobKind::OracleCompare => {
                let full = complete()?;
                let rows = self.oracle(&full.spectrum)?;
                let path = self.csv("compare.csv", |w| {
                    writeln!(w, "omega,sigma_freq,sigma_time,rel_diff")?;
                    for (o, f, t) in &rows {
                        writeln!(w, "{o:.16e},{f:.16e},{t:.16e},{:.16e}", ((t - f) / f).abs())?;
                    }
                    Ok(())
                })?;
                Ok(vec![(path, "oracle_compare")])
            }
            JobKind::ConvergenceStudy => self.convergence(spec, complete),
        }
    }

    fn oracle(&self, spec: &ModelSpectrum) -> Result<Vec<(f64, f64, f64)>> {
        let beta = self.beta(spec)?;
        let o = &self.cfg.oracle;
        let omegas = match &o.omegas {
            Some(ws) => ws.clone(),
            None => {
                let lines = line_spectrum(spec, self.cfg.lines.threshold);
                let w1 = lines.lines.first().map(|l| l.omega).unwrap_or(gap(spec)?);
                [0.5, 0.9, 1.0, 1.1, 1.5].iter().map(|f| f * w1).collect()
            }
        };
        let opts = o.propagation();
        omegas
            .into_iter()
            .map(|w| {
                let f = sigma_finite_beta(spec, beta, w, self.cfg.eta)?.sigma;
                let t = finite_difference_conductivity(spec, beta, w, self.cfg.eta, o.e_step, &opts)?;
                Ok((w, f, t))
            })
            .collect()
    }

    fn convergence(&self, base: &ModelSpectrum, complete: impl Fn() -> Result<Cached>) -> Result<Outputs> {
        let c = &self.cfg.convergence;
        let eta = self.cfg.eta;
        let omegas: Vec<f64> = match &c.omegas {
            Some(ws) => ws.clone(),
            None => {
                let g = gap(base)?;
                vec![0.5 * g, g, 2.0 * g]
            }
        };
        let mut rows = Vec::new();
        for level in 0..c.levels {
            let scale = 1usize << level;
            let params = self.params.with_modes(self.params.m_modes * scale);
            params.validate()?;
            let cached = cache::load_or_compute(
                &self.dir.join(CACHE_DIR),
                &params,
                self.cfg.model.fourier_cutoff() * scale,
                &self.cfg.spectrum.options(self.cfg.spectrum.selection),
            )?;
            let s = &cached.spectrum;
            let sig = omegas.iter().map(|&w| sigma_leading(s, w, eta)).collect::<tubecond::Result<Vec<_>>>()?;
            rows.push((params.m_modes, self.cfg.model.fourier_cutoff() * scale, s.ground_energy(), gap(s)?, sig));
        }
        let table = self.csv("convergence.csv", |w| {
            writeln!(w, "m_modes,m_fourier,mu_0,gap,sigma_1,sigma_2,sigma_3,drift_mu_0,drift_gap,drift_sigma")?;
            for (i, (m, mf, mu0, g, sig)) in rows.iter().enumerate() {
                let mut line = format!("{m},{mf},{mu0:.16e},{g:.16e}");
                for s in sig {
                    write!(line, ",{s:.16e}").expect("string write");
                }
                if i == 0 {
                    line.push_str(",,,");
                } else {
                    let (_, _, p_mu0, p_g, p_sig) = &rows[i - 1];
                    let ds = sig.iter().zip(p_sig).map(|(a, b)| ((a - b) / b).abs()).fold(0.0, f64::max);
                    write!(line, ",{:.16e},{:.16e},{ds:.16e}", (mu0 - p_mu0).abs(), (g - p_g).abs()).expect("string write");
                }
                writeln!(w, "{line}")?;
            }
            Ok(())
        })?;

        let full = complete()?;
        let beta = self.beta(&full.spectrum)?;
        let w = omegas[1];
        let mut dt_rows = Vec::new();
        for level in 0..c.dt_levels {
            let opts = PropagationOptions {
                dt_factor: self.cfg.oracle.dt_factor / (1u64 << level) as f64,
                ..self.cfg.oracle.propagation()
            };
            let t = finite_difference_conductivity(&full.spectrum, beta, w, eta, self.cfg.oracle.e_step, &opts)?;
            dt_rows.push((opts.dt_factor, t));
        }
        let dt_table = self.csv("convergence_dt.csv", |out| {
            writeln!(out, "dt_factor,sigma_time,drift")?;
            for (i, (f, t)) in dt_rows.iter().enumerate() {
                if i == 0 {
                    writeln!(out, "{f:.16e},{t:.16e},")?;
                } else {
                    writeln!(out, "{f:.16e},{t:.16e},{:.16e}", ((t - dt_rows[i - 1].1) / t).abs())?;
                }
            }
            Ok(())
        })?;
        Ok(vec![(table, "convergence"), (dt_table, "convergence_dt")])
    }
}

fn gap(spec: &ModelSpectrum) -> Result<f64> {
    spec.gap()
        .ok_or_else(|| tubecond::Error::InsufficientData("spectrum has no level above the ground manifold".into()).into())
}

fn relative(dir: &Path, path: &Path) -> PathBuf {
    path.strip_prefix(dir).map(Path::to_path_buf).unwrap_or_else(|_| path.to_path_buf())
}

/// Runs `jobs` and writes the manifest. Job failures are recorded in the
/// manifest and reported as [`CliError::JobsFailed`] after it is written.
pub fn run_jobs(cfg: &RunConfig, jobs: &[JobKind]) -> Result<ResultManifest> {
    cfg.prepare_output_dir()?;
    let dir = cfg.output_dir.as_path();
    let params = cfg.model.params()?;
    let run = Run {
        cfg,
        params,
        dir,
        hash: cfg.model.hash(),
    };

    let mut manifest = ResultManifest {
        model_hash: run.hash.clone(),
        ..Default::default()
    };
    // Keep entries of earlier runs whose files are still present.
    if let Ok(prev) = ResultManifest::read(dir) {
        for a in prev.artifacts {
            if dir.join(&a.path).exists() {
                manifest.add(a.path, &a.role);
            }
        }
    }
    fs::write(dir.join(CONFIG_ECHO_FILE), cfg.echo())
        .map_err(|e| CliError::io(format!("writing {CONFIG_ECHO_FILE}"), e))?;
    manifest.add(CONFIG_ECHO_FILE, "config");

    let primary = match run.spectrum(cfg.spectrum.selection) {
        Ok(p) => p,
        Err(e) => {
            for &j in jobs {
                manifest.jobs.push(JobRecord {
                    job: j.name().into(),
                    ok: false,
                    error: Some(e.to_string()),
                });
            }
            manifest.write(dir)?;
            return Err(e);
        }
    };
    manifest.add(relative(dir, &primary.path), "cache");
    record_diagnostics(&mut manifest, cfg, &run.params, &primary);

    let complete_cell = std::sync::OnceLock::new();
    let complete = || -> Result<Cached> {
        if cfg.spectrum.selection == Selection::All {
            return Ok(primary.clone());
        }
        if let Some(c) = complete_cell.get() {
            return Ok(Cached::clone(c));
        }
        let c = run.spectrum(Selection::All)?;
        Ok(complete_cell.get_or_init(|| c).clone())
    };

    let results: Vec<Result<Outputs>> = if cfg.deterministic {
        jobs.iter().map(|&j| run.job(j, &primary, complete)).collect()
    } else {
        let primary_ref = &primary;
        let run_ref = &run;
        std::thread::scope(|s| {
            let handles: Vec<_> = jobs.iter().map(|&j| s.spawn(move || run_ref.job(j, primary_ref, complete))).collect();
            handles.into_iter().map(|h| h.join().expect("job thread panicked")).collect()
        })
    };

    let mut numerical = None;
    for (&j, r) in jobs.iter().zip(results) {
        match r {
            Ok(outputs) => {
                for (p, role) in outputs {
                    manifest.add(p, role);
                }
                manifest.jobs.push(JobRecord {
                    job: j.name().into(),
                    ok: true,
                    error: None,
                });
            }
            Err(e) => {
                log::error!("job {} failed: {e}", j.name());
                manifest.jobs.push(JobRecord {
                    job: j.name().into(),
                    ok: false,
                    error: Some(e.to_string()),
                });
                numerical.get_or_insert(e);
            }
        }
    }
    if let Some(c) = complete_cell.get() {
        manifest.add(relative(dir, &c.path), "cache");
    }
    // Convergence levels cache their own spectra.
    if let Ok(entries) = fs::read_dir(dir.join(CACHE_DIR)) {
        for e in entries.flatten() {
            manifest.add(relative(dir, &e.path()), "cache");
        }
    }
    manifest.write(dir)?;
    match numerical {
        None => Ok(manifest),
        Some(e) if jobs.len() == 1 => Err(e),
        Some(_) => Err(CliError::JobsFailed {
            failed: manifest.failed(),
            total: jobs.len(),
        }),
    }
}

fn record_diagnostics(manifest: &mut ResultManifest, cfg: &RunConfig, params: &ModelParams, primary: &Cached) {
    let s = &primary.spectrum;
    let max_residual = s.sectors.iter().flat_map(|x| x.residuals.iter().copied()).fold(0.0, f64::max);
    let d = &mut manifest.diagnostics;
    d.insert("cache_hit".into(), json!(primary.hit));
    d.insert("states".into(), json!(s.num_states()));
    d.insert("ground_energy".into(), json!(s.ground_energy()));
    d.insert("ground_degeneracy".into(), json!(s.ground_manifold().len()));
    d.insert("gap".into(), json!(s.gap()));
    d.insert("weight_tail".into(), json!(s.weight_tail()));
    d.insert("max_residual".into(), json!(max_residual));
    d.insert("truncation_clean_below".into(), json!(truncation_clean_cutoff(params)));
    d.insert("m_fourier".into(), json!(cfg.model.fourier_cutoff()));
    if let Some(b) = cfg.beta {
        if let Ok(z) = s.partition(b, 1e-12) {
            d.insert("partition_tail".into(), json!(z.tail));
        }
    }
}
