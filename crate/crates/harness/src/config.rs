//! Experiment configuration: a TOML file with `[model]`, `[grid]`,
//! `[operator]`, `[experiment]` and `[output]` tables.
//!
//! ```toml
//! [model]
//! kind = "integrable"      # integrable | mechanical | periodic_drift | quadratic_shift
//! dim = 2
//! omega = "golden"         # or an explicit vector, e.g. [0.3, 0.7]
//!
//! [grid]
//! resolution = 64
//!
//! [operator]
//! dt = 0.05
//! window_n = 64
//!
//! [experiment]
//! times = [1, 2, 4, 8]
//! seed = 7
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use wkam_core::action::{KernelFamily, DEFAULT_DT, DEFAULT_V_MAX};
use wkam_core::grid::{make_grid, PeriodicGrid, TorusPoint, ValueField};
use wkam_core::models::{golden, golden_direction, LagrangianModel, MatrixField};

use crate::error::{HarnessError, Result};

pub const MODEL_KINDS: [&str; 4] = ["integrable", "mechanical", "periodic_drift", "quadratic_shift"];

/// A frequency vector, given by name or explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OmegaSpec {
    Named(String),
    Vector(Vec<f64>),
}

impl OmegaSpec {
    pub fn resolve(&self, dim: usize) -> Result<Vec<f64>> {
        let v = match self {
            OmegaSpec::Named(name) => match (name.as_str(), dim) {
                ("golden", 1) => vec![golden()],
                ("golden", 2) => golden_direction().to_vec(),
                ("zero", d) => vec![0.0; d],
                _ => return Err(HarnessError::Config(format!("unknown frequency name `{name}`"))),
            },
            OmegaSpec::Vector(v) => v.clone(),
        };
        if v.len() != dim || v.iter().any(|x| !x.is_finite()) {
            return Err(HarnessError::Config(format!("frequency vector must have {dim} finite entries, got {v:?}")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub kind: String,
    #[serde(default = "one")]
    pub dim: usize,
    pub omega: Option<OmegaSpec>,
    /// Potential amplitude of the mechanical model.
    pub amplitude: Option<f64>,
    /// Mean drift of the periodic-drift model.
    pub mean: Option<OmegaSpec>,
    pub drift_amplitude: Option<Vec<f64>>,
    /// Constant coefficient matrix of the quadratic-shift model (row major).
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub quartic: f64,
    #[serde(default)]
    pub energy_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

impl Default for GridBlock {
    fn default() -> Self {
        Self { resolution: default_resolution() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorBlock {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_v_max")]
    pub v_max: f64,
    #[serde(default = "default_window")]
    pub window_n: usize,
    #[serde(default)]
    pub tau: f64,
    /// Target phase of barrier tables; defaults to `tau`.
    pub tau_prime: Option<f64>,
}

impl Default for OperatorBlock {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            v_max: default_v_max(),
            window_n: default_window(),
            tau: 0.0,
            tau_prime: None,
        }
    }
}

/// Which kernel path the rate study uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelPath {
    /// Analytic for integrable models, dynamic programming otherwise.
    Auto,
    Analytic,
    Dp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Fourier modes of the random initial field.
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_periods")]
    pub max_periods: usize,
    #[serde(default = "default_path")]
    pub path: KernelPath,
    /// Resolution of the analytic y-grid; defaults to 512 in 1D and 64 in 2D.
    pub analytic_resolution: Option<usize>,
    pub fit_range: Option<[f64; 2]>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_m_count")]
    pub m_count: usize,
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_sample_pairs")]
    pub sample_pairs: usize,
    #[serde(default = "default_domination_tol")]
    pub domination_tol: f64,
    #[serde(default = "default_calibration_tol")]
    pub calibration_tol: f64,
    #[serde(default = "default_span")]
    pub span: usize,
    #[serde(default = "default_aubry_tol")]
    pub aubry_tol: f64,
    #[serde(default = "default_potential_horizon")]
    pub potential_horizon: usize,
}

impl Default for ExperimentBlock {
    fn default() -> Self {
        toml::from_str("").expect("every experiment key has a default")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelBlock,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub operator: OperatorBlock,
    #[serde(default)]
    pub experiment: ExperimentBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

fn one() -> usize {
    1
}
fn default_resolution() -> usize {
    64
}
fn default_dt() -> f64 {
    DEFAULT_DT
}
fn default_v_max() -> f64 {
    DEFAULT_V_MAX
}
fn default_window() -> usize {
    16
}
fn default_times() -> Vec<f64> {
    (0..10).map(|k| f64::from(1u32 << k)).collect()
}
fn default_modes() -> usize {
    3
}
fn default_tolerance() -> f64 {
    1e-9
}
fn default_max_periods() -> usize {
    2000
}
fn default_path() -> KernelPath {
    KernelPath::Auto
}
fn default_delta() -> f64 {
    0.3
}
fn default_m_count() -> usize {
    6
}
fn default_radii() -> Vec<f64> {
    (1..=6).map(|k| 0.5f64.powi(k)).collect()
}
fn default_horizon() -> f64 {
    1.0e4
}
fn default_sample_pairs() -> usize {
    500
}
fn default_domination_tol() -> f64 {
    2e-2
}
fn default_calibration_tol() -> f64 {
    1e-2
}
fn default_span() -> usize {
    10
}
fn default_aubry_tol() -> f64 {
    2e-2
}
fn default_potential_horizon() -> usize {
    8
}

fn bad(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        // an unreadable config is a usage problem, not a run failure
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if !MODEL_KINDS.contains(&m.kind.as_str()) {
            return Err(bad(format!("unknown model kind `{}` (expected one of {})", m.kind, MODEL_KINDS.join(", "))));
        }
        if !(1..=2).contains(&m.dim) {
            return Err(bad(format!("model dimension must be 1 or 2, got {}", m.dim)));
        }
        if self.grid.resolution < wkam_core::grid::MIN_RESOLUTION {
            return Err(bad(format!("grid resolution must be at least {}", wkam_core::grid::MIN_RESOLUTION)));
        }
        let op = &self.operator;
        if !(op.dt > 0.0 && op.dt <= 1.0) || !(op.v_max > 0.0) || op.window_n == 0 {
            return Err(bad("operator needs 0 < dt <= 1, v_max > 0 and window_n >= 1"));
        }
        for t in std::iter::once(op.tau).chain(op.tau_prime) {
            if !(0.0..1.0).contains(&t) {
                return Err(bad(format!("phase {t} must lie in [0, 1)")));
            }
        }
        let e = &self.experiment;
        if e.times.is_empty() || e.times.iter().any(|t| !(*t > 0.0)) || e.times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("experiment.times must be positive and strictly increasing"));
        }
        if !(e.tolerance > 0.0) || e.max_periods == 0 || e.modes == 0 {
            return Err(bad("tolerance, max_periods and modes must be positive"));
        }
        if !(e.delta > 0.0 && e.delta < 0.5) {
            return Err(bad(format!("delta must lie in (0, 1/2), got {}", e.delta)));
        }
        if e.radii.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) || e.radii.windows(2).any(|w| w[0] <= w[1]) {
            return Err(bad("radii must be strictly decreasing inside (0, 1]"));
        }
        if !(e.horizon > 0.0) || e.span == 0 || e.potential_horizon == 0 {
            return Err(bad("horizon, span and potential_horizon must be positive"));
        }
        if let Some([lo, hi]) = e.fit_range {
            if !(lo > 0.0 && lo < hi) {
                return Err(bad("fit_range must satisfy 0 < lo < hi"));
            }
        }
        if let Some(x0) = &e.x0 {
            if x0.len() != m.dim {
                return Err(bad("x0 must have one coordinate per dimension"));
            }
        }
        self.build_model()?;
        Ok(())
    }

    pub fn build_model(&self) -> Result<LagrangianModel> {
        let m = &self.model;
        let d = m.dim;
        let need = |o: &Option<OmegaSpec>, what: &str| -> Result<Vec<f64>> {
            o.as_ref().ok_or_else(|| bad(format!("{} model needs `{what}`", m.kind)))?.resolve(d)
        };
        let model = match m.kind.as_str() {
            "integrable" => LagrangianModel::integrable(&need(&m.omega, "omega")?)?,
            "mechanical" => LagrangianModel::mechanical(d, m.amplitude.unwrap_or(1.0))?,
            "periodic_drift" => {
                let amp = m.drift_amplitude.clone().unwrap_or_else(|| vec![0.0; d]);
                LagrangianModel::periodic_drift(&need(&m.mean, "mean")?, &amp)?
            }
            "quadratic_shift" => {
                let a = match &m.matrix {
                    None => MatrixField::identity(),
                    Some(rows) => {
                        let mut a = [[0.0; 2]; 2];
                        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                            return Err(bad(format!("matrix must be {d}x{d}")));
                        }
                        for (i, r) in rows.iter().enumerate() {
                            a[i][..d].copy_from_slice(r);
                        }
                        MatrixField::Constant(a)
                    }
                };
                LagrangianModel::quadratic_shift(a, &need(&m.omega, "omega")?, m.quartic)?
            }
            other => return Err(bad(format!("unknown model kind `{other}`"))),
        };
        Ok(model.with_energy_shift(m.energy_shift))
    }

    pub fn build_grid(&self) -> Result<PeriodicGrid> {
        Ok(make_grid(self.model.dim, self.grid.resolution)?)
    }

    pub fn build_family(&self) -> Result<Arc<KernelFamily>> {
        let model = self.build_model()?;
        Ok(KernelFamily::new(&model, &self.build_grid()?, self.operator.dt, self.operator.v_max)?)
    }

    /// Random smooth initial field on `grid`, seeded from the experiment seed.
    pub fn initial_field(&self, grid: PeriodicGrid) -> ValueField {
        ValueField::random_smooth(grid, self.experiment.modes, self.experiment.seed)
    }

    pub fn x0(&self) -> TorusPoint {
        match &self.experiment.x0 {
            Some(x) => TorusPoint::new(x),
            None => TorusPoint::new(&vec![0.0; self.model.dim]),
        }
    }

    pub fn tau_prime(&self) -> f64 {
        self.operator.tau_prime.unwrap_or(self.operator.tau)
    }

    pub fn omega(&self) -> Result<Vec<f64>> {
        let m = &self.model;
        let spec = m.omega.as_ref().or(m.mean.as_ref()).ok_or_else(|| bad("a frequency `omega` is required"))?;
        spec.resolve(m.dim)
    }
}
