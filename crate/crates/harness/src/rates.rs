//! Convergence-rate studies: classic and windowed iterates against the
//! limit, least-squares slopes on log-log axes and the dominance table.

use serde::{Deserialize, Serialize};
use wkam_core::action::KernelFamily;
use wkam_core::grid::{make_grid, sup_distance, ValueField};
use wkam_core::models::ModelKind;
use wkam_core::operators::EvolutionState;

use crate::analytic::{sup_to_constant, AnalyticPath};
use crate::config::{ExperimentConfig, KernelPath};
use crate::error::{HarnessError, Result};

/// Fewest points a slope is fitted through.
pub const MIN_FIT_SAMPLES: usize = 5;

/// RMS log-space residual above which a fit is only indicative.
pub const MAX_FIT_RESIDUAL: f64 = 0.15;

/// Measured floors are multiplied by this before samples are excluded.
pub const FLOOR_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Classic,
    Windowed,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Classic => "classic",
            Variant::Windowed => "windowed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub model: String,
    pub variant: Variant,
    /// (t, sup distance to the limit), t ascending.
    pub samples: Vec<(f64, f64)>,
    pub fitted_slope: f64,
    pub fitted_intercept: f64,
    /// Smallest and largest t that entered the fit.
    pub fit_range: [f64; 2],
    /// RMS of the residuals of ln(dist) about the fitted line.
    pub residual_of_fit: f64,
    pub noise_floor: f64,
    pub fitted_points: usize,
    /// Residual above MAX_FIT_RESIDUAL: the slope is reported but not trusted.
    pub inconclusive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceRow {
    pub t: f64,
    pub dist_classic: f64,
    pub dist_windowed: f64,
}

impl DominanceRow {
    pub fn holds(&self, slack: f64) -> bool {
        self.dist_windowed <= self.dist_classic + slack
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStudy {
    /// "analytic" or "dp".
    pub path: String,
    pub ubar: f64,
    pub classic: ConvergenceReport,
    pub windowed: ConvergenceReport,
    pub dominance: Vec<DominanceRow>,
    pub dominance_holds: bool,
    /// (t, sup |DP iterate − analytic iterate|) at small t, analytic path only.
    pub dp_cross_check: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

/// Ordinary least squares of ln y against ln x.
pub fn fit_loglog(points: &[(f64, f64)]) -> Option<LineFit> {
    if points.len() < 2 || points.iter().any(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return None;
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Some(LineFit { slope, intercept, residual: (ss / n).sqrt() })
}

/// Fits the samples that lie above `floor` and inside `range`.
pub fn build_report(
    model: &str,
    variant: Variant,
    samples: Vec<(f64, f64)>,
    floor: f64,
    range: Option<[f64; 2]>,
) -> Result<ConvergenceReport> {
    let kept: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|(t, d)| *d > floor && range.map_or(true, |[lo, hi]| *t >= lo && *t <= hi))
        .collect();
    if kept.len() < MIN_FIT_SAMPLES {
        return Err(HarnessError::InsufficientSamples {
            variant: variant.to_string(),
            above: kept.len(),
            needed: MIN_FIT_SAMPLES,
            floor,
        });
    }
    let fit = fit_loglog(&kept).ok_or_else(|| HarnessError::Config("degenerate sample times".into()))?;
    Ok(ConvergenceReport {
        model: model.to_string(),
        variant,
        samples,
        fitted_slope: fit.slope,
        fitted_intercept: fit.intercept,
        fit_range: [kept[0].0, kept[kept.len() - 1].0],
        residual_of_fit: fit.residual,
        noise_floor: floor,
        fitted_points: kept.len(),
        inconclusive: fit.residual > MAX_FIT_RESIDUAL,
    })
}

fn default_analytic_resolution(dim: usize) -> usize {
    if dim == 1 {
        512
    } else {
        64
    }
}

/// Runs both variants from the same initial field and fits their rates.
pub fn rate_experiment(cfg: &ExperimentConfig) -> Result<RateStudy> {
    let model = cfg.build_model()?;
    let analytic_ok = matches!(model.kind(), ModelKind::Integrable { .. });
    let use_analytic = match cfg.experiment.path {
        KernelPath::Auto => analytic_ok,
        KernelPath::Analytic if !analytic_ok => {
            return Err(HarnessError::Config("the analytic path is only available for integrable models".into()))
        }
        KernelPath::Analytic => true,
        KernelPath::Dp => false,
    };
    if use_analytic {
        analytic_study(cfg)
    } else {
        dp_study(cfg)
    }
}

fn analytic_study(cfg: &ExperimentConfig) -> Result<RateStudy> {
    let dim = cfg.model.dim;
    let res = cfg.experiment.analytic_resolution.unwrap_or_else(|| default_analytic_resolution(dim));
    let grid = make_grid(dim, res)?;
    let u0 = cfg.initial_field(grid);
    let omega = cfg.omega()?;
    let path = AnalyticPath::new(&omega, &u0)?;
    let ubar = path.ubar();

    let mut classic = Vec::new();
    let mut windowed = Vec::new();
    let mut dominance = Vec::new();
    for &t in &cfg.experiment.times {
        let dc = sup_to_constant(&path.classic(t), ubar);
        let dw = sup_to_constant(&path.windowed(t), ubar);
        classic.push((t, dc));
        windowed.push((t, dw));
        dominance.push(DominanceRow { t, dist_classic: dc, dist_windowed: dw });
    }

    let t_last = *cfg.experiment.times.last().expect("validated non-empty");
    let magnitude = u0.max_abs().max(1.0);
    let floor = FLOOR_FACTOR * path.shift_defect(t_last, 1.0).max(f64::EPSILON * magnitude);

    let dp_cross_check = dp_cross_check(cfg, &u0)?;
    let name = cfg.model.kind.clone();
    Ok(RateStudy {
        path: "analytic".into(),
        ubar,
        classic: build_report(&name, Variant::Classic, classic, floor, cfg.experiment.fit_range)?,
        windowed: build_report(&name, Variant::Windowed, windowed, floor, cfg.experiment.fit_range)?,
        dominance_holds: dominance.iter().all(|r| r.holds(0.0)),
        dominance,
        dp_cross_check,
    })
}

/// DP iterates at t = 1, 2 on the analytic grid, compared to the closed form.
fn dp_cross_check(cfg: &ExperimentConfig, u0: &ValueField) -> Result<Vec<(f64, f64)>> {
    let model = cfg.build_model()?;
    let grid = *u0.grid();
    let family = KernelFamily::new(&model, &grid, cfg.operator.dt, cfg.operator.v_max)?;
    let path = AnalyticPath::new(&cfg.omega()?, u0)?;
    let shift = model.energy_shift();
    let mut out = Vec::new();
    for t in [1.0, 2.0] {
        let dp = family.propagate(u0.samples(), 0.0, t, false)?;
        let exact = path.classic(t);
        let diff = dp.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - shift * t - b).abs()));
        out.push((t, diff));
    }
    Ok(out)
}

fn dp_study(cfg: &ExperimentConfig) -> Result<RateStudy> {
    let family = cfg.build_family()?;
    let grid = *family.grid();
    if cfg.experiment.times.iter().any(|t| t.fract() != 0.0) {
        return Err(HarnessError::Config("the DP path samples whole periods only".into()));
    }
    let u0 = cfg.initial_field(grid);
    let state = EvolutionState::new(family.clone(), u0)?;
    let mut limit = state.clone();
    let ubar = limit.fixed_point(cfg.experiment.tolerance, cfg.experiment.max_periods)?;
    let steps = family.steps_per_period();

    let mut classic = Vec::new();
    let mut windowed = Vec::new();
    let mut dominance = Vec::new();
    for &t in &cfg.experiment.times {
        let periods = t as usize;
        let it = ValueField::new(grid, state.iterate(periods), 0.0)?;
        let win = if family.model().is_autonomous() {
            state.window_min_autonomous(t, steps)?
        } else {
            state.window_min_periodic(periods, 0.0)?
        };
        let dc = sup_distance(&it, &ubar)?;
        let dw = sup_distance(&win, &ubar)?;
        classic.push((t, dc));
        windowed.push((t, dw));
        dominance.push(DominanceRow { t, dist_classic: dc, dist_windowed: dw });
    }
    // one kinetic quantum: the cost of a single-cell hop in one sub-step
    let h = grid.spacing();
    let dt = family.dt();
    let floor = FLOOR_FACTOR * dt * 0.5 * (h / dt) * (h / dt);
    let name = cfg.model.kind.clone();
    Ok(RateStudy {
        path: "dp".into(),
        ubar: ubar.min(),
        classic: build_report(&name, Variant::Classic, classic, floor, cfg.experiment.fit_range)?,
        windowed: build_report(&name, Variant::Windowed, windowed, floor, cfg.experiment.fit_range)?,
        dominance_holds: dominance.iter().all(|r| r.holds(0.0)),
        dominance,
        dp_cross_check: Vec::new(),
    })
}
