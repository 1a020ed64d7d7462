//! Uniform periodic grids on the flat tori T¹ and T², sampled value fields
//! and the torus metric.
//!
//! Nodes are numbered with axis 0 running fastest: in two dimensions node
//! `(i, j)` has flat index `i + N * j` and sits at `(i / N, j / N)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible number of nodes per axis.
pub const MIN_RESOLUTION: usize = 8;

/// Uniform axis-aligned grid on T¹ or T².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PeriodicGrid {
    dim: usize,
    resolution: usize,
}

impl PeriodicGrid {
    pub fn new(dim: usize, resolution: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Config(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if resolution < MIN_RESOLUTION {
            return Err(Error::Config(format!(
                "grid resolution must be at least {MIN_RESOLUTION}, got {resolution}"
            )));
        }
        Ok(Self { dim, resolution })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nodes per axis.
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    pub fn node_count(&self) -> usize {
        self.resolution.pow(self.dim as u32)
    }

    /// Per-axis integer indices of a flat node index.
    pub fn axis_indices(&self, node: usize) -> [usize; 2] {
        let n = self.resolution;
        if self.dim == 1 {
            [node, 0]
        } else {
            [node % n, node / n]
        }
    }

    /// Flat index from (possibly negative or overflowing) per-axis indices,
    /// wrapped modulo the resolution.
    pub fn wrap_index(&self, idx: [i64; 2]) -> usize {
        let n = self.resolution as i64;
        let i = idx[0].rem_euclid(n) as usize;
        if self.dim == 1 {
            i
        } else {
            i + self.resolution * idx[1].rem_euclid(n) as usize
        }
    }

    /// Coordinates of a node; unused axes are zero.
    pub fn node_coords(&self, node: usize) -> [f64; 2] {
        let [i, j] = self.axis_indices(node);
        let h = self.spacing();
        [i as f64 * h, j as f64 * h]
    }

    pub fn node_point(&self, node: usize) -> TorusPoint {
        let c = self.node_coords(node);
        TorusPoint::new(&c[..self.dim])
    }

    /// Node nearest to a point, ties resolved towards the lower index.
    pub fn nearest_node(&self, point: &[f64]) -> usize {
        let n = self.resolution as f64;
        let mut idx = [0i64; 2];
        for (axis, slot) in idx.iter_mut().enumerate().take(self.dim) {
            *slot = (reduce_unit(point[axis]) * n).round() as i64;
        }
        self.wrap_index(idx)
    }

    pub fn check_same(&self, other: &PeriodicGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{}D/{} vs {}D/{}",
                self.dim, self.resolution, other.dim, other.resolution
            )));
        }
        Ok(())
    }
}

/// Builds a grid, rejecting unsupported dimensions and coarse resolutions.
pub fn make_grid(dim: usize, resolution: usize) -> Result<PeriodicGrid> {
    PeriodicGrid::new(dim, resolution)
}

/// Reduces a real number to `[0, 1)`.
pub fn reduce_unit(x: f64) -> f64 {
    let r = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Reduces a displacement component to the minimal lift in `[-1/2, 1/2)`.
pub fn minimal_component(d: f64) -> f64 {
    let r = reduce_unit(d + 0.5) - 0.5;
    if r < -0.5 {
        r + 1.0
    } else {
        r
    }
}

/// A point of Tⁿ with every coordinate in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    pub fn new(coords: &[f64]) -> Self {
        Self {
            coords: coords.iter().map(|&c| reduce_unit(c)).collect(),
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Translates by `displacement` on the cover and projects back.
    pub fn translate(&self, displacement: &[f64]) -> Self {
        let shifted: Vec<f64> = self
            .coords
            .iter()
            .zip(displacement)
            .map(|(c, d)| c + d)
            .collect();
        Self::new(&shifted)
    }
}

/// Flat distance: Euclidean norm of the shortest lifted displacement.
pub fn torus_distance(a: &TorusPoint, b: &TorusPoint) -> f64 {
    torus_distance_raw(a.coords(), b.coords())
}

pub(crate) fn torus_distance_raw(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| minimal_component(y - x).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// All lifted displacements `b - a + k` with `|k_i| <= lift_radius`, sorted
/// by Euclidean norm (stable, so ties keep enumeration order with the most
/// negative shifts first).
pub fn min_lift_displacement(a: &TorusPoint, b: &TorusPoint, lift_radius: usize) -> Vec<Vec<f64>> {
    let base: Vec<f64> = b.coords().iter().zip(a.coords()).map(|(y, x)| y - x).collect();
    let r = lift_radius as i64;
    let mut out: Vec<Vec<f64>> = Vec::new();
    match base.len() {
        1 => {
            for k in -r..=r {
                out.push(vec![base[0] + k as f64]);
            }
        }
        _ => {
            for k0 in -r..=r {
                for k1 in -r..=r {
                    out.push(vec![base[0] + k0 as f64, base[1] + k1 as f64]);
                }
            }
        }
    }
    let norm = |v: &Vec<f64>| v.iter().map(|c| c * c).sum::<f64>();
    out.sort_by(|p, q| norm(p).total_cmp(&norm(q)));
    out
}

/// A continuous function sampled at the nodes of a periodic grid, tagged
/// with a phase in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueField {
    grid: PeriodicGrid,
    samples: Vec<f64>,
    time_tag: f64,
}

impl ValueField {
    pub fn new(grid: PeriodicGrid, samples: Vec<f64>, time_tag: f64) -> Result<Self> {
        if samples.len() != grid.node_count() {
            return Err(Error::Config(format!(
                "field has {} samples but the grid has {} nodes",
                samples.len(),
                grid.node_count()
            )));
        }
        if let Some(bad) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Config(format!("non-finite sample at node {bad}")));
        }
        Ok(Self {
            grid,
            samples,
            time_tag: reduce_unit(time_tag),
        })
    }

    pub fn constant(grid: PeriodicGrid, value: f64) -> Self {
        Self {
            grid,
            samples: vec![value; grid.node_count()],
            time_tag: 0.0,
        }
    }

    pub fn from_fn(grid: PeriodicGrid, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let samples = (0..grid.node_count())
            .map(|node| {
                let c = grid.node_coords(node);
                f(&c[..grid.dim()])
            })
            .collect();
        Self {
            grid,
            samples,
            time_tag: 0.0,
        }
    }

    /// Random trigonometric polynomial with `modes` frequencies per axis and
    /// amplitudes decaying like `1/|k|²`; deterministic in `seed`.
    pub fn random_smooth(grid: PeriodicGrid, modes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms: Vec<([f64; 2], f64, f64)> = Vec::new();
        let m = modes as i64;
        let (lo1, hi1) = if grid.dim() == 2 { (-m, m) } else { (0, 0) };
        for k0 in 0..=m {
            for k1 in lo1..=hi1 {
                if k0 == 0 && k1 <= 0 {
                    continue;
                }
                let norm2 = (k0 * k0 + k1 * k1) as f64;
                let amp = rng.gen_range(-1.0..1.0) / norm2;
                let phase = rng.gen_range(0.0..1.0);
                terms.push(([k0 as f64, k1 as f64], amp, phase));
            }
        }
        Self::from_fn(grid, |x| {
            terms
                .iter()
                .map(|(k, amp, phase)| {
                    let arg = k[0] * x[0] + if x.len() > 1 { k[1] * x[1] } else { 0.0 };
                    amp * (2.0 * PI * (arg + phase)).cos()
                })
                .sum()
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn time_tag(&self) -> f64 {
        self.time_tag
    }

    pub fn with_time_tag(mut self, tag: f64) -> Self {
        self.time_tag = reduce_unit(tag);
        self
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|s| *s += c);
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|s| *s = f(*s));
        out
    }

    /// Node-wise minimum with another field on the same grid.
    pub fn min_with(&mut self, other: &ValueField) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        for (a, b) in self.samples.iter_mut().zip(&other.samples) {
            if *b < *a {
                *a = *b;
            }
        }
        Ok(())
    }

    /// Periodic multilinear interpolation at an arbitrary point.
    pub fn interpolate(&self, point: &[f64]) -> f64 {
        let n = self.grid.resolution();
        let nf = n as f64;
        let mut base = [0i64; 2];
        let mut frac = [0.0f64; 2];
        for axis in 0..self.grid.dim() {
            let s = reduce_unit(point[axis]) * nf;
            let fl = s.floor();
            base[axis] = fl as i64;
            frac[axis] = s - fl;
        }
        if self.grid.dim() == 1 {
            let a = self.samples[self.grid.wrap_index([base[0], 0])];
            let b = self.samples[self.grid.wrap_index([base[0] + 1, 0])];
            a * (1.0 - frac[0]) + b * frac[0]
        } else {
            let v = |di: i64, dj: i64| self.samples[self.grid.wrap_index([base[0] + di, base[1] + dj])];
            let (fx, fy) = (frac[0], frac[1]);
            (v(0, 0) * (1.0 - fx) + v(1, 0) * fx) * (1.0 - fy) + (v(0, 1) * (1.0 - fx) + v(1, 1) * fx) * fy
        }
    }
}

/// Sup-norm distance between two fields on the same grid.
pub fn sup_distance(u: &ValueField, v: &ValueField) -> Result<f64> {
    u.grid.check_same(&v.grid)?;
    Ok(u.samples
        .iter()
        .zip(&v.samples)
        .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}
