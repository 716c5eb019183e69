//! Scenario configuration: hand-editable TOML (JSON accepted), mapped onto
//! the solver and diagnostic settings, with validation that reports every
//! violated constraint at once.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qnls::diagnostics::{MorawetzConfig, PsiProfile};
use qnls::evolution::SolverConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub half_length: f64,
    pub n_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            half_length: 32.0,
            n_points: 2048,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub dt_init: f64,
    pub dt_safety: f64,
    pub dealias: bool,
    pub max_steps: usize,
    pub blowup_grad_threshold: f64,
    pub blowup_lambda_floor: f64,
    pub conservation_tol: f64,
    pub output_every: usize,
    pub adaptive: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            dt_init: d.dt_init,
            dt_safety: d.dt_safety,
            dealias: d.dealias,
            max_steps: d.max_steps,
            blowup_grad_threshold: d.blowup_grad_threshold,
            blowup_lambda_floor: d.blowup_lambda_floor,
            conservation_tol: d.conservation_tol,
            output_every: d.output_every,
            adaptive: d.adaptive,
        }
    }
}

impl SolverSection {
    pub fn to_solver(&self) -> SolverConfig {
        SolverConfig {
            dt_init: self.dt_init,
            dt_safety: self.dt_safety,
            dealias: self.dealias,
            max_steps: self.max_steps,
            blowup_grad_threshold: self.blowup_grad_threshold,
            blowup_lambda_floor: self.blowup_lambda_floor,
            conservation_tol: self.conservation_tol,
            output_every: self.output_every,
            adaptive: self.adaptive,
            nonlinear: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Soliton {
        #[serde(default = "one")]
        lambda: f64,
        #[serde(default)]
        theta: f64,
        #[serde(default)]
        x0: f64,
        #[serde(default)]
        xi0: f64,
    },
    Pseudoconformal {
        /// Concentration time T; the run starts at t_start < T.
        big_t: f64,
        t_start: f64,
        #[serde(default = "one")]
        lambda: f64,
        #[serde(default)]
        theta: f64,
        #[serde(default)]
        x0: f64,
        #[serde(default)]
        xi0: f64,
    },
    PerturbedSoliton {
        noise_amp: f64,
        #[serde(default = "default_k_band")]
        k_band: f64,
        #[serde(default)]
        even: bool,
        /// Project the noise orthogonal to the modulation directions.
        #[serde(default)]
        admissible: bool,
        /// Renormalize the total mass to the soliton mass.
        #[serde(default)]
        mass_renormalize: bool,
    },
    File {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

fn default_k_band() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MorawetzSection {
    pub r: f64,
    pub eta1: f64,
    pub cutoff_level: i32,
}

impl Default for MorawetzSection {
    fn default() -> Self {
        Self {
            r: 8.0,
            eta1: 0.5,
            cutoff_level: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    /// Names from the built-in registry; unknown names are a validation
    /// error.
    pub enabled: Vec<String>,
    pub morawetz: MorawetzSection,
    /// Dyadic truncation parameter k; the projection acts at level k + 9.
    pub truncation_level: i32,
    pub bilinear_level: i32,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            enabled: vec!["mass".into(), "energy".into(), "gn_ratio".into()],
            morawetz: MorawetzSection::default(),
            truncation_level: 5,
            bilinear_level: 4,
        }
    }
}

impl DiagnosticsSection {
    pub fn morawetz_config(&self) -> MorawetzConfig {
        MorawetzConfig {
            r: self.morawetz.r,
            eta1: self.morawetz.eta1,
            cutoff_level: self.morawetz.cutoff_level,
            psi: PsiProfile::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModulationMode {
    #[default]
    Off,
    Symmetric2,
    Full4,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub initial: InitialData,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    pub t_final: f64,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub modulation_mode: ModulationMode,
    #[serde(default)]
    pub rng_seed: u64,
}

pub const KNOWN_DIAGNOSTICS: &[&str] = &[
    "mass",
    "energy",
    "gn_ratio",
    "variance",
    "morawetz",
    "truncated_energy",
    "bilinear",
];

impl ScenarioConfig {
    /// Collect every violated constraint; an empty list means valid.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_alphanumeric() || c == '-' || c == '_') {
            v.push("name: must be a nonempty identifier (alphanumeric, '-', '_')".into());
        }
        if !(self.grid.half_length > 0.0) {
            v.push(format!(
                "grid.half_length: must be positive, got {}",
                self.grid.half_length
            ));
        }
        if self.grid.n_points < 16 || !self.grid.n_points.is_power_of_two() {
            v.push(format!(
                "grid.n_points: must be a power of two >= 16, got {}",
                self.grid.n_points
            ));
        }
        if !(self.solver.dt_init > 0.0) {
            v.push(format!(
                "solver.dt_init: must be positive, got {}",
                self.solver.dt_init
            ));
        }
        if !(self.solver.dt_safety > 0.0) {
            v.push(format!(
                "solver.dt_safety: must be positive, got {}",
                self.solver.dt_safety
            ));
        }
        if !(self.solver.blowup_grad_threshold > 0.0) {
            v.push("solver.blowup_grad_threshold: must be positive".into());
        }
        if !(self.solver.blowup_lambda_floor > 0.0) {
            v.push("solver.blowup_lambda_floor: must be positive".into());
        }
        if !(self.solver.conservation_tol > 0.0) {
            v.push("solver.conservation_tol: must be positive".into());
        }
        if self.solver.output_every == 0 {
            v.push("solver.output_every: must be at least 1".into());
        }
        if self.t_final == 0.0 || !self.t_final.is_finite() {
            v.push(format!(
                "t_final: must be nonzero and finite, got {}",
                self.t_final
            ));
        }
        for name in &self.diagnostics.enabled {
            if !KNOWN_DIAGNOSTICS.contains(&name.as_str()) {
                v.push(format!(
                    "diagnostics.enabled: unknown diagnostic '{name}' \
                     (known: {KNOWN_DIAGNOSTICS:?})"
                ));
            }
        }
        if !(self.diagnostics.morawetz.r > 0.0) {
            v.push("diagnostics.morawetz.r: must be positive".into());
        }
        if !(self.diagnostics.morawetz.eta1 > 0.0 && self.diagnostics.morawetz.eta1 <= 1.0) {
            v.push("diagnostics.morawetz.eta1: must lie in (0, 1]".into());
        }
        if self.diagnostics.bilinear_level < 3 {
            v.push(format!(
                "diagnostics.bilinear_level: must be >= 3, got {}",
                self.diagnostics.bilinear_level
            ));
        }
        match &self.initial {
            InitialData::Soliton { lambda, .. } => {
                if !(*lambda > 0.0) {
                    v.push("initial.lambda: must be positive".into());
                }
            }
            InitialData::Pseudoconformal {
                big_t,
                t_start,
                lambda,
                ..
            } => {
                if !(t_start < big_t) {
                    v.push(format!(
                        "initial: pseudoconformal start t_start = {t_start} must precede big_t = {big_t}"
                    ));
                }
                if !(*lambda > 0.0) {
                    v.push("initial.lambda: must be positive".into());
                }
            }
            InitialData::PerturbedSoliton { noise_amp, k_band, .. } => {
                if !(*noise_amp >= 0.0) {
                    v.push("initial.noise_amp: must be nonnegative".into());
                }
                if !(*k_band > 0.0) {
                    v.push("initial.k_band: must be positive".into());
                }
            }
            InitialData::File { path } => {
                if path.as_os_str().is_empty() {
                    v.push("initial.path: must not be empty".into());
                }
            }
        }
        v
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
        let cfg: Self = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text)?
        };
        Ok(cfg)
    }
}
