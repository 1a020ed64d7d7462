//! How long a linear flow needs before its orbit passes within R of every
//! node of a fine grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wkam_core::grid::{make_grid, torus_distance, TorusPoint};

use crate::error::{HarnessError, Result};
use crate::rates::fit_loglog;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgodizationRow {
    pub radius: f64,
    /// None when the horizon was reached first.
    pub time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodizationReport {
    pub omega: Vec<f64>,
    pub x0: Vec<f64>,
    pub resolution: usize,
    pub horizon: f64,
    pub rows: Vec<ErgodizationRow>,
    /// Slope of ln T against ln R over the rows with 0 < T < horizon.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub residual_of_fit: Option<f64>,
    pub timeouts: Vec<f64>,
}

/// Earliest s ≥ 0 with |x0 + ωs − p| ≤ r for the lift p, if any.
fn entry_time(d: [f64; 2], omega: [f64; 2], w2: f64, r: f64) -> Option<f64> {
    let b = d[0] * omega[0] + d[1] * omega[1];
    let c = d[0] * d[0] + d[1] * d[1] - r * r;
    let disc = b * b - w2 * c;
    if disc < 0.0 {
        return None;
    }
    let root = disc.sqrt();
    let hi = (b + root) / w2;
    if hi < 0.0 {
        return None;
    }
    Some(((b - root) / w2).max(0.0))
}

/// First time the orbit of x0 comes within `radius` of `node`, scanning the
/// lifts of the node one unit cell at a time along the dominant axis.
fn node_entry(x0: [f64; 2], omega: [f64; 2], node: [f64; 2], radius: f64, horizon: f64, dim: usize) -> Option<f64> {
    let a = if omega[0].abs() >= omega[1].abs() { 0 } else { 1 };
    let b = 1 - a;
    let wa = omega[a];
    let w2 = omega[0] * omega[0] + omega[1] * omega[1];
    let dir = wa.signum();
    // lifts whose a-coordinate the orbit reaches at s ≥ −(1 + r)/|ω_a|
    let mut k = (x0[a] - node[a] - dir * (1.0 + radius)).floor() as i64 - 1;
    let mut best: Option<f64> = None;
    if dir < 0.0 {
        k = (x0[a] - node[a] + 1.0 + radius).ceil() as i64 + 1;
    }
    loop {
        let pa = node[a] + k as f64;
        let s_center = (pa - x0[a]) / wa;
        let slack = (1.0 + radius) / wa.abs();
        if s_center - slack > horizon || best.is_some_and(|t| s_center - slack > t) {
            break;
        }
        if s_center + slack >= 0.0 {
            let kbs: Vec<f64> = if dim == 1 {
                vec![0.0]
            } else {
                let line_b = x0[b] + omega[b] * s_center;
                let base = (line_b - node[b]).round();
                vec![base - 1.0, base, base + 1.0]
            };
            for kb in kbs {
                let mut d = [0.0; 2];
                d[a] = pa - x0[a];
                d[b] = if dim == 1 { 0.0 } else { node[b] + kb - x0[b] };
                if let Some(s) = entry_time(d, omega, w2, radius) {
                    if s <= horizon && best.map_or(true, |t| s < t) {
                        best = Some(s);
                    }
                }
            }
        }
        k += if dir < 0.0 { -1 } else { 1 };
    }
    best
}

/// T(R): the largest first-entry time over all nodes of a grid with
/// `resolution` points per axis.
pub fn ergodization_time(omega: &[f64], x0: &TorusPoint, radius: f64, resolution: usize, horizon: f64) -> Result<f64> {
    let dim = omega.len();
    if x0.dim() != dim {
        return Err(HarnessError::Config("x0 and ω have different dimensions".into()));
    }
    if !(radius > 0.0) {
        return Err(HarnessError::Config(format!("radius must be positive, got {radius}")));
    }
    let grid = make_grid(dim, resolution)?;
    // a ball that already covers the torus needs no time at all
    if (0..grid.node_count()).all(|i| torus_distance(&grid.node_point(i), x0) <= radius) {
        return Ok(0.0);
    }
    if omega.iter().all(|w| *w == 0.0) {
        return Err(HarnessError::Timeout { radius, horizon });
    }
    let mut w = [0.0; 2];
    w[..dim].copy_from_slice(omega);
    let mut start = [0.0; 2];
    start[..dim].copy_from_slice(x0.coords());
    let times: Vec<Option<f64>> = (0..grid.node_count())
        .into_par_iter()
        .map(|i| node_entry(start, w, grid.node_coords(i), radius, horizon, dim))
        .collect();
    let mut worst = 0.0f64;
    for t in times {
        match t {
            Some(t) => worst = worst.max(t),
            None => return Err(HarnessError::Timeout { radius, horizon }),
        }
    }
    Ok(worst)
}

pub fn ergodization_probe(
    omega: &[f64],
    radii: &[f64],
    x0: &TorusPoint,
    resolution: usize,
    horizon: f64,
) -> Result<ErgodizationReport> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) || radii.windows(2).any(|w| w[0] <= w[1]) {
        return Err(HarnessError::Config("radii must be strictly decreasing inside (0, 1]".into()));
    }
    let mut rows = Vec::with_capacity(radii.len());
    let mut timeouts = Vec::new();
    for &r in radii {
        match ergodization_time(omega, x0, r, resolution, horizon) {
            Ok(t) => rows.push(ErgodizationRow { radius: r, time: Some(t) }),
            Err(HarnessError::Timeout { .. }) => {
                rows.push(ErgodizationRow { radius: r, time: None });
                timeouts.push(r);
            }
            Err(e) => return Err(e),
        }
    }
    let pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.time.filter(|t| *t > 0.0).map(|t| (r.radius, t))).collect();
    let fit = fit_loglog(&pts);
    Ok(ErgodizationReport {
        omega: omega.to_vec(),
        x0: x0.coords().to_vec(),
        resolution,
        horizon,
        rows,
        slope: fit.map(|f| f.slope),
        intercept: fit.map(|f| f.intercept),
        residual_of_fit: fit.map(|f| f.residual),
        timeouts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use wkam_core::models::{golden, golden_direction};

    fn brute_force(omega: &[f64], x0: &TorusPoint, r: f64, res: usize, horizon: f64) -> Option<f64> {
        // march along the orbit in tiny steps
        let g = make_grid(omega.len(), res).unwrap();
        let ds = 1e-3;
        let mut first = vec![None; g.node_count()];
        let mut s = 0.0;
        while s <= horizon {
            let disp: Vec<f64> = omega.iter().map(|w| w * s).collect();
            let p = x0.translate(&disp);
            for (i, f) in first.iter_mut().enumerate() {
                if f.is_none() && torus_distance(&g.node_point(i), &p) <= r {
                    *f = Some(s);
                }
            }
            if first.iter().all(|f| f.is_some()) {
                return first.iter().map(|f| f.unwrap()).reduce(f64::max);
            }
            s += ds;
        }
        None
    }

    #[test]
    fn matches_orbit_marching() {
        let w = golden_direction();
        let x0 = TorusPoint::new(&[0.1, 0.7]);
        for r in [0.3, 0.12] {
            let exact = ergodization_time(&w, &x0, r, 12, 100.0).unwrap();
            let marched = brute_force(&w, &x0, r, 12, 100.0).unwrap();
            assert!(marched >= exact - 1e-9 && marched - exact < 2e-3, "{r}: {exact} vs {marched}");
        }
    }

    #[test]
    fn negative_directions_work() {
        let x0 = TorusPoint::new(&[0.0, 0.0]);
        let a = ergodization_time(&[golden(), -0.4], &x0, 0.1, 16, 500.0).unwrap();
        let b = brute_force(&[golden(), -0.4], &x0, 0.1, 16, 500.0).unwrap();
        assert!((a - b).abs() < 2e-3, "{a} vs {b}");
    }

    #[test]
    fn circle_flow_is_exact() {
        // the last node reached is the one just outside the initial ball on the trailing side
        let x0 = TorusPoint::new(&[0.0]);
        let t = ergodization_time(&[0.5], &x0, 0.125, 16, 100.0).unwrap();
        assert!((t - (1.0 - 0.1875 - 0.125) / 0.5).abs() < 1e-12, "{t}");
        let b = brute_force(&[0.5], &x0, 0.125, 16, 100.0).unwrap();
        assert!((t - b).abs() < 2e-3, "{t} vs {b}");
    }

    #[test]
    fn unit_radius_is_instant() {
        let x0 = TorusPoint::new(&[0.3, 0.3]);
        assert_eq!(ergodization_time(&golden_direction(), &x0, 1.0, 32, 10.0).unwrap(), 0.0);
    }

    #[test]
    fn rational_direction_times_out() {
        let x0 = TorusPoint::new(&[0.0, 0.0]);
        let err = ergodization_time(&[1.0, 0.0], &x0, 0.25, 16, 200.0).unwrap_err();
        assert!(matches!(err, HarnessError::Timeout { .. }));
        let rep = ergodization_probe(&[1.0, 0.0], &[0.6, 0.25], &x0, 16, 50.0).unwrap();
        assert_eq!(rep.timeouts, vec![0.25]);
    }
}
