//! Scenario execution: build the initial field, evolve, track modulation
//! when enabled, evaluate the enabled diagnostics, and persist the run.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};

/// Typed markers so the CLI can map failures onto its exit codes.
#[derive(Debug)]
pub struct ValidationFailure(pub String);
impl std::fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "validation failed: {}", self.0)
    }
}
impl std::error::Error for ValidationFailure {}

#[derive(Debug)]
pub struct NumericalFailure(pub String);
impl std::fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "numerical failure: {}", self.0)
    }
}
impl std::error::Error for NumericalFailure {}

use qnls::evolution::{evolve, HaltReason};
use qnls::ground_state::q_field;
use qnls::modulation::{ode_residuals, track, virial_in_s, DecomposeMode, ModulationSeries};
use qnls::perturb::{admissible_mass_renormalized, band_limited_noise, project_admissible, NoiseSpec};
use qnls::registry::builtin_diagnostics;
use qnls::symmetries::{pseudoconformal_soliton, soliton};
use qnls::{Field, Grid};

use crate::config::{InitialData, ModulationMode, ScenarioConfig};
use crate::writer::{read_manifest, RunManifest, RunSummary, RunWriter, SeriesRow, SERIES_COLUMNS};

/// The environment variable that overrides the output root directory.
pub const OUT_ROOT_ENV: &str = "QNLS_OUT_ROOT";

pub fn default_out_root() -> PathBuf {
    std::env::var_os(OUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

pub fn build_initial(cfg: &ScenarioConfig, grid: &Arc<Grid>) -> anyhow::Result<Field> {
    let field = match &cfg.initial {
        InitialData::Soliton {
            lambda,
            theta,
            x0,
            xi0,
        } => soliton(0.0, *lambda, *theta, *x0, *xi0, grid).map_err(|e| anyhow!("{e}"))?,
        InitialData::Pseudoconformal {
            big_t,
            t_start,
            lambda,
            theta,
            x0,
            xi0,
        } => pseudoconformal_soliton(*t_start, *big_t, *lambda, *theta, *x0, *xi0, grid)
            .map_err(|e| anyhow!("{e}"))?,
        InitialData::PerturbedSoliton {
            noise_amp,
            k_band,
            even,
            admissible,
            mass_renormalize,
        } => {
            let spec = NoiseSpec {
                amplitude: *noise_amp,
                k_band: *k_band,
                even: *even,
            };
            let mut eps = band_limited_noise(grid, &spec, cfg.rng_seed).map_err(|e| anyhow!("{e}"))?;
            if *mass_renormalize {
                eps = admissible_mass_renormalized(&eps, !even).map_err(|e| anyhow!("{e}"))?;
            } else if *admissible {
                eps = project_admissible(&eps, !even).map_err(|e| anyhow!("{e}"))?;
            }
            let mut u = q_field(grid);
            for (uv, ev) in u.values_mut().iter_mut().zip(eps.values()) {
                *uv += ev;
            }
            u
        }
        InitialData::File { path } => {
            let f = crate::fieldio::read_field(path)?;
            if f.grid().n_points() != grid.n_points()
                || f.grid().half_length() != grid.half_length()
            {
                bail!(
                    "field file grid (L={}, n={}) does not match the scenario grid (L={}, n={})",
                    f.grid().half_length(),
                    f.grid().n_points(),
                    grid.half_length(),
                    grid.n_points()
                );
            }
            f
        }
    };
    Ok(field)
}

fn halt_label(h: &HaltReason) -> &'static str {
    match h {
        HaltReason::GradThreshold => "gradient-threshold",
        HaltReason::LambdaFloor => "lambda-floor",
        HaltReason::MaxSteps => "max-steps",
    }
}

const COL_COUNT: usize = SERIES_COLUMNS.len();

fn col(name: &str) -> usize {
    SERIES_COLUMNS
        .iter()
        .position(|c| *c == name)
        .expect("known column")
}

/// Run one scenario into `<out_root>/<name>`, returning the manifest.
/// A mid-run blowup halt still produces a complete run directory with the
/// partial series and the halt reason in the summary.
pub fn run_scenario(cfg: &ScenarioConfig, out_root: &Path) -> anyhow::Result<RunManifest> {
    let violations = cfg.violations();
    if !violations.is_empty() {
        return Err(anyhow::Error::new(ValidationFailure(format!(
            "invalid scenario config:\n  {}",
            violations.join("\n  ")
        ))));
    }
    let grid = Grid::new(cfg.grid.half_length, cfg.grid.n_points).map_err(|e| anyhow!("{e}"))?;
    let u0 = build_initial(cfg, &grid)?;
    let solver = cfg.solver.to_solver();

    let evolution = evolve(&u0, cfg.t_final, &solver).map_err(|e| match e {
        qnls::Error::Numerical { reason, .. } => anyhow::Error::new(NumericalFailure(reason)),
        other => anyhow!("{other}"),
    })?;
    let frames: Vec<(f64, Field)> = evolution
        .steps
        .iter()
        .map(|s| (s.t, s.field.clone()))
        .collect();

    // modulation tracking over the recorded frames
    let mode = match cfg.modulation_mode {
        ModulationMode::Off => None,
        ModulationMode::Symmetric2 => Some(DecomposeMode::Symmetric2),
        ModulationMode::Full4 => Some(DecomposeMode::Full4),
    };
    let series: Option<ModulationSeries> = match mode {
        Some(m) => Some(track(&frames, m, None).map_err(|e| anyhow!("{e}"))?),
        None => None,
    };
    let laws = series
        .as_ref()
        .filter(|s| s.rows.len() >= 3)
        .map(|s| {
            Ok::<_, anyhow::Error>((
                ode_residuals(s).map_err(|e| anyhow!("{e}"))?,
                virial_in_s(s).map_err(|e| anyhow!("{e}"))?,
            ))
        })
        .transpose()?;

    // enabled scalar diagnostics per frame
    let registry = builtin_diagnostics(
        cfg.diagnostics.morawetz_config(),
        cfg.diagnostics.truncation_level,
        cfg.diagnostics.bilinear_level,
    );
    let mut rows: Vec<SeriesRow> = Vec::with_capacity(frames.len());
    for (i, (t, field)) in frames.iter().enumerate() {
        let mut row: SeriesRow = vec![None; COL_COUNT];
        row[col("t")] = Some(*t);
        if let Some(s) = &series {
            if let Some(r) = s.rows.get(i) {
                row[col("s")] = Some(r.s);
                row[col("lambda")] = Some(r.lambda);
                row[col("gamma")] = Some(r.gamma);
                row[col("x0")] = Some(r.x0);
                row[col("xi")] = Some(r.xi);
                row[col("eps_l2")] = Some(r.eps_l2);
            }
        }
        if let Some((ode, vir)) = &laws {
            if let Some(r4) = ode.get(i) {
                row[col("r_lambda")] = Some(r4[0]);
                row[col("r_gamma")] = Some(r4[1]);
                row[col("r_x")] = Some(r4[2]);
                row[col("r_xi")] = Some(r4[3]);
            }
            if let Some(v) = vir.get(i) {
                row[col("virial_residual")] = Some(*v);
            }
        }
        for name in &cfg.diagnostics.enabled {
            if let Some(d) = registry.get(name.as_str()) {
                row[col(name)] = Some(d.evaluate(field).map_err(|e| anyhow!("{e}"))?);
            }
        }
        rows.push(row);
    }

    let mut writer = RunWriter::create(out_root.join(&cfg.name))?;
    writer.write_series(cfg, &rows)?;
    let truncation_note = series.as_ref().and_then(|s| s.truncated.clone());
    let report = serde_json::json!({
        "scenario": cfg.name,
        "frames": rows.len(),
        "steps_taken": evolution.n_steps,
        "halted": evolution.halted.as_ref().map(halt_label),
        "warnings": evolution.warnings,
        "modulation_truncated": truncation_note,
        "final_t": frames.last().map(|(t, _)| t),
    });
    writer.write_report(&report)?;
    writer.write_plot_script()?;
    if let Some((_, last)) = frames.last() {
        writer.write_field_snapshot("final.qfld", last)?;
    }
    let mut warnings = evolution.warnings.clone();
    if let Some(note) = truncation_note {
        warnings.push(note);
    }
    let summary = RunSummary {
        steps: evolution.n_steps,
        halted: evolution.halted.as_ref().map(|h| halt_label(h).to_string()),
        warnings: warnings.clone(),
        pass_count: rows.len(),
        warn_count: warnings.len(),
    };
    writer.finalize(cfg, summary)
}

/// Run several scenarios with at most `parallelism` workers. Each run is
/// isolated in its own directory; one failure doesn't stop the batch.
pub fn batch(
    configs: &[ScenarioConfig],
    parallelism: usize,
    out_root: &Path,
) -> Vec<(String, anyhow::Result<RunManifest>)> {
    let parallelism = parallelism.max(1);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<std::sync::Mutex<Option<(String, anyhow::Result<RunManifest>)>>> =
        configs.iter().map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..parallelism.min(configs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= configs.len() {
                    break;
                }
                let cfg = &configs[i];
                let out = run_scenario(cfg, out_root);
                *results[i].lock().unwrap() = Some((cfg.name.clone(), out));
            });
        }
    });
    results
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every slot filled"))
        .collect()
}

/// Load every scenario config (*.toml, *.json) in a directory, sorted by
/// file name so batch order is deterministic.
pub fn load_config_dir(dir: &Path) -> anyhow::Result<Vec<ScenarioConfig>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.extension()
                .is_some_and(|ext| ext == "toml" || ext == "json")
        })
        .collect();
    paths.sort();
    paths.iter().map(|p| ScenarioConfig::load(p)).collect()
}

/// Presence of a manifest implies every listed file exists.
pub fn verify_run_dir(dir: &Path) -> anyhow::Result<RunManifest> {
    let manifest = read_manifest(dir)?;
    for f in &manifest.output_files {
        let p = dir.join(f);
        if !p.exists() {
            bail!(
                "manifest lists {} but it does not exist in {}",
                f,
                dir.display()
            );
        }
    }
    Ok(manifest)
}
