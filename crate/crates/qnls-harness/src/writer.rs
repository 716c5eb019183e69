//! Run-directory persistence. The manifest is written last and atomically
//! (temp file + rename), so its presence marks a complete run; a directory
//! without one can be deleted safely.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;

pub const SERIES_SCHEMA: &str = "qnls-series v1";
pub const SERIES_COLUMNS: &[&str] = &[
    "t",
    "s",
    "lambda",
    "gamma",
    "x0",
    "xi",
    "eps_l2",
    "r_lambda",
    "r_gamma",
    "r_x",
    "r_xi",
    "virial_residual",
    "mass",
    "energy",
    "gn_ratio",
    "variance",
    "morawetz",
    "truncated_energy",
    "bilinear",
];

/// One CSV row; `None` renders as an empty cell.
pub type SeriesRow = Vec<Option<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub halted: Option<String>,
    pub warnings: Vec<String>,
    pub pass_count: usize,
    pub warn_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: ScenarioConfig,
    pub code_version: String,
    pub started: String,
    pub finished: String,
    pub output_files: Vec<String>,
    pub summary: RunSummary,
}

/// Staged writer: series and report first, manifest last. Tests drive the
/// stages directly to simulate interruption between file writes.
pub struct RunWriter {
    dir: PathBuf,
    started: chrono::DateTime<chrono::Utc>,
    files: Vec<String>,
}

impl RunWriter {
    pub fn create(dir: PathBuf) -> anyhow::Result<Self> {
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("creating run directory {}", dir.display()))?;
        Ok(Self {
            dir,
            started: chrono::Utc::now(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_series(
        &mut self,
        cfg: &ScenarioConfig,
        rows: &[SeriesRow],
    ) -> anyhow::Result<PathBuf> {
        let mut out = String::new();
        out.push_str(&format!("# schema: {SERIES_SCHEMA}\n"));
        out.push_str(&format!("# scenario: {}\n", cfg.name));
        out.push_str(&format!(
            "# grid: half_length={} n_points={}\n",
            cfg.grid.half_length, cfg.grid.n_points
        ));
        out.push_str(&format!(
            "# solver: dt_init={} dt_safety={} dealias={} adaptive={} output_every={}\n",
            cfg.solver.dt_init,
            cfg.solver.dt_safety,
            cfg.solver.dealias,
            cfg.solver.adaptive,
            cfg.solver.output_every
        ));
        out.push_str(&format!("# rng_seed: {}\n", cfg.rng_seed));
        out.push_str(&SERIES_COLUMNS.join(","));
        out.push('\n');
        for row in rows {
            let cells: Vec<String> = row
                .iter()
                .map(|v| v.map(|x| format!("{x}")).unwrap_or_default())
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        let path = self.dir.join("series.csv");
        std::fs::write(&path, out)?;
        self.files.push("series.csv".into());
        Ok(path)
    }

    pub fn write_report(&mut self, report: &serde_json::Value) -> anyhow::Result<PathBuf> {
        let path = self.dir.join("report.json");
        std::fs::write(&path, serde_json::to_string_pretty(report)?)?;
        self.files.push("report.json".into());
        Ok(path)
    }

    pub fn write_plot_script(&mut self) -> anyhow::Result<PathBuf> {
        let script = r##"#!/usr/bin/env python3
"""Plot the time series written next to this script."""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
rows = []
with open(here / "series.csv") as fh:
    for line in fh:
        if line.startswith("#"):
            continue
        rows.append(line.rstrip("\n"))
reader = csv.DictReader(rows)
data = {k: [] for k in reader.fieldnames}
for rec in reader:
    for k, v in rec.items():
        data[k].append(float(v) if v else float("nan"))

fig, axes = plt.subplots(2, 2, figsize=(11, 7), sharex=True)
for ax, cols in zip(
    axes.flat,
    [["mass", "energy"], ["lambda"], ["eps_l2"], ["r_lambda", "r_gamma", "r_x", "r_xi"]],
):
    for c in cols:
        if any(v == v for v in data.get(c, [])):
            ax.plot(data["t"], data[c], label=c)
    ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("t")
fig.tight_layout()
out = here / "series.png"
fig.savefig(out, dpi=130)
print(f"wrote {out}")
"##;
        let path = self.dir.join("plot.py");
        std::fs::write(&path, script)?;
        self.files.push("plot.py".into());
        Ok(path)
    }

    pub fn write_field_snapshot(
        &mut self,
        name: &str,
        field: &qnls::Field,
    ) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(name);
        crate::fieldio::write_field(&path, field)?;
        self.files.push(name.to_string());
        Ok(path)
    }

    /// Write the manifest atomically. Called last: a run directory without
    /// `manifest.json` is incomplete by definition.
    pub fn finalize(
        self,
        cfg: &ScenarioConfig,
        summary: RunSummary,
    ) -> anyhow::Result<RunManifest> {
        let manifest = RunManifest {
            scenario: cfg.clone(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started: self.started.to_rfc3339(),
            finished: chrono::Utc::now().to_rfc3339(),
            output_files: self.files.clone(),
            summary,
        };
        let tmp = self.dir.join("manifest.json.tmp");
        std::fs::write(&tmp, serde_json::to_string_pretty(&manifest)?)?;
        std::fs::rename(&tmp, self.dir.join("manifest.json"))?;
        Ok(manifest)
    }
}

pub fn read_manifest(dir: &Path) -> anyhow::Result<RunManifest> {
    let text = std::fs::read_to_string(dir.join("manifest.json"))
        .with_context(|| format!("no manifest in {}", dir.display()))?;
    Ok(serde_json::from_str(&text)?)
}

/// Parse a series.csv, rejecting unknown schema versions.
pub fn read_series(path: &Path) -> anyhow::Result<(Vec<String>, Vec<SeriesRow>)> {
    let text = std::fs::read_to_string(path)?;
    let mut header_seen = false;
    let mut columns = Vec::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# schema: ") {
            if rest.trim() != SERIES_SCHEMA {
                anyhow::bail!(
                    "unknown series schema {rest:?} (this reader supports '{SERIES_SCHEMA}')"
                );
            }
            header_seen = true;
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if columns.is_empty() {
            columns = line.split(',').map(|s| s.to_string()).collect();
            continue;
        }
        rows.push(
            line.split(',')
                .map(|c| if c.is_empty() { None } else { c.parse().ok() })
                .collect(),
        );
    }
    if !header_seen {
        anyhow::bail!("{}: missing schema header", path.display());
    }
    Ok((columns, rows))
}
