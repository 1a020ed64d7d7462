//! The tent example: a bump of height δ at x⁰ over a zero floor, evaluated
//! at the times the drift returns close to its start. At such times the
//! classic iterate at x⁰ still pays roughly δ²/(2t), so t·T_t u(x⁰) stays
//! bounded away from zero.

use serde::{Deserialize, Serialize};
use wkam_core::grid::{make_grid, torus_distance, ValueField};

use crate::analytic::AnalyticPath;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRow {
    pub m: usize,
    pub t_m: f64,
    /// Distance of ω·t_m to the origin of the torus.
    pub return_distance: f64,
    pub value: f64,
    /// t_m · T_{t_m} u(x⁰).
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessTable {
    pub delta: f64,
    pub omega: Vec<f64>,
    pub resolution: usize,
    /// min u of the tent, which is also its limit value.
    pub ubar: f64,
    pub lower_bound: f64,
    pub upper_probe: f64,
    pub rows: Vec<SharpnessRow>,
    /// Every scaled value is at least `lower_bound`.
    pub lower_bound_holds: bool,
    /// Some scaled value is at most `upper_probe`.
    pub upper_probe_hit: bool,
}

/// Continued-fraction digits of x ∈ (0, 1), at most `count` of them.
pub fn continued_fraction(x: f64, count: usize) -> Vec<u64> {
    let mut out = Vec::new();
    let mut r = x;
    for _ in 0..count {
        if r.abs() < 1e-12 {
            break;
        }
        let inv = 1.0 / r;
        let a = inv.floor();
        out.push(a as u64);
        r = inv - a;
    }
    out
}

/// Denominators q_k of the convergents of x.
pub fn convergent_denominators(x: f64, count: usize) -> Vec<u64> {
    let (mut q_prev, mut q) = (0u64, 1u64);
    let mut out = Vec::new();
    for a in continued_fraction(x, count) {
        let next = a * q + q_prev;
        q_prev = q;
        q = next;
        out.push(q);
    }
    out
}

fn circle_distance(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// First `count` return times within `radius` of the start: convergent
/// denominators in 1D, record-breaking lattice times in 2D.
pub fn return_times(omega: &[f64], radius: f64, count: usize) -> Result<Vec<f64>> {
    match omega.len() {
        1 => {
            let w = omega[0].rem_euclid(1.0);
            if w == 0.0 {
                return Err(HarnessError::Config("a zero rotation number never leaves its start".into()));
            }
            let qs = convergent_denominators(w, 64);
            let out: Vec<f64> = qs
                .into_iter()
                .filter(|q| circle_distance(*q as f64 * w) < radius)
                .take(count)
                .map(|q| q as f64)
                .collect();
            if out.len() < count {
                return Err(HarnessError::Config(format!("only {} return times found for ω = {w}", out.len())));
            }
            Ok(out)
        }
        2 => {
            // record minima of the distance of ωt to the origin on a lattice of step 1/64
            let step = 1.0 / 64.0;
            let mut best = f64::INFINITY;
            let mut out = Vec::new();
            let mut k = 1u64;
            while out.len() < count {
                let t = k as f64 * step;
                let d = circle_distance(omega[0] * t).hypot(circle_distance(omega[1] * t));
                if d < best {
                    best = d;
                    if d < radius {
                        out.push(t);
                    }
                }
                k += 1;
                if t > 1.0e6 {
                    return Err(HarnessError::Config("no returns found below t = 1e6".into()));
                }
            }
            Ok(out)
        }
        d => Err(HarnessError::Config(format!("unsupported dimension {d}"))),
    }
}

/// Tent u(x) = max(δ − d(x, x⁰), 0) with x⁰ at the origin node.
pub fn tent(grid: wkam_core::grid::PeriodicGrid, delta: f64) -> ValueField {
    let origin = grid.node_point(0);
    ValueField::from_fn(grid, |x| {
        let d = torus_distance(&wkam_core::grid::TorusPoint::new(x), &origin);
        (delta - d).max(0.0)
    })
}

pub fn sharpness_example(delta: f64, omega: &[f64], m_count: usize, resolution: usize) -> Result<SharpnessTable> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(HarnessError::Config(format!("delta must lie in (0, 1/2), got {delta}")));
    }
    let grid = make_grid(omega.len(), resolution)?;
    let u = tent(grid, delta);
    let path = AnalyticPath::new(omega, &u)?;
    let times = return_times(omega, delta / 2.0, m_count)?;
    let rows: Vec<SharpnessRow> = times
        .iter()
        .enumerate()
        .map(|(m, &t)| {
            let table = path.classic_table(t);
            // only x⁰ is needed: min_y u(y) + Q(−y)
            let n = grid.resolution();
            let value = (0..grid.node_count())
                .map(|y| {
                    let [a, b] = grid.axis_indices(y);
                    let z = grid.wrap_index([(n - a) as i64, (n - b) as i64]);
                    u.samples()[y] + table[z]
                })
                .fold(f64::INFINITY, f64::min);
            let return_distance = omega.iter().map(|w| circle_distance(w * t).powi(2)).sum::<f64>().sqrt();
            SharpnessRow { m: m + 1, t_m: t, return_distance, value, scaled: t * value }
        })
        .collect();
    let lower_bound = delta * delta / 64.0;
    let upper_probe = 10.0 * delta * delta / 32.0;
    Ok(SharpnessTable {
        delta,
        omega: omega.to_vec(),
        resolution,
        ubar: u.min(),
        lower_bound,
        upper_probe,
        lower_bound_holds: rows.iter().all(|r| r.scaled >= lower_bound),
        upper_probe_hit: rows.iter().any(|r| r.scaled <= upper_probe),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use wkam_core::models::golden;

    #[test]
    fn golden_digits_are_all_ones() {
        assert!(continued_fraction(golden(), 20).iter().all(|a| *a == 1));
        assert_eq!(convergent_denominators(golden(), 8), vec![1, 2, 3, 5, 8, 13, 21, 34]);
        assert_eq!(continued_fraction(0.5, 5), vec![2]);
    }

    #[test]
    fn sqrt_two_digits() {
        let digits = continued_fraction(2f64.sqrt() - 1.0, 10);
        assert!(digits.iter().all(|a| *a == 2), "{digits:?}");
    }

    #[test]
    fn tent_has_zero_floor() {
        let g = make_grid(1, 64).unwrap();
        let u = tent(g, 0.3);
        assert_eq!(u.min(), 0.0);
        assert!((u.max() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn planar_returns_are_records() {
        let w = wkam_core::models::golden_direction();
        let ts = return_times(&w, 0.1, 3).unwrap();
        assert!(ts.windows(2).all(|p| p[0] < p[1]));
    }
}
