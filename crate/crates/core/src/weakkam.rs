//! Backward weak KAM checks on space-time fields: domination against the
//! action potential, calibrated curves by argmin backtracking, Aubry sets,
//! static classes and the representation of solutions from trace data.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{barrier_row, peierls_barrier, potential_rows, BarrierTable, KernelFamily};
use crate::error::{Error, Result};
use crate::grid::{minimal_component, PeriodicGrid, ValueField};
use crate::operators::EvolutionState;

/// u(x, τ) on a lattice of phases τ_j = j·dt, j = 0..steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeField {
    grid: PeriodicGrid,
    taus: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl SpaceTimeField {
    pub fn new(grid: PeriodicGrid, taus: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if taus.is_empty() || taus[0] != 0.0 || taus.windows(2).any(|w| w[0] >= w[1]) || taus.iter().any(|t| *t >= 1.0) {
            return Err(Error::Config("tau lattice must be sorted, start at 0 and stay below 1".into()));
        }
        if values.len() != taus.len() || values.iter().any(|v| v.len() != grid.node_count()) {
            return Err(Error::Config("space-time values do not match the grid and tau lattice".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("space-time values must be finite".into()));
        }
        Ok(Self { grid, taus, values })
    }

    /// The full sub-step lattice of a kernel family.
    pub fn family_lattice(family: &KernelFamily) -> Vec<f64> {
        let steps = family.steps_per_period();
        (0..steps).map(|j| j as f64 / steps as f64).collect()
    }

    /// Windowed limit field: the window minimum over [n, 2n] from the
    /// state's current field, continued through one period sub-step by
    /// sub-step.
    pub fn from_window_limit(state: &EvolutionState, n: usize) -> Result<Self> {
        let family = state.family();
        let taus = Self::family_lattice(family);
        let mut values = Vec::with_capacity(taus.len());
        let mut cur = state.window_min_from(state.current().samples(), n);
        let shift = state.c_estimate() * family.dt();
        for j in 0..taus.len() {
            if j > 0 {
                cur = family.sub_kernel(j - 1).apply(&cur, false);
                if shift != 0.0 {
                    cur.iter_mut().for_each(|v| *v += shift);
                }
            }
            values.push(cur.clone());
        }
        Self::new(*family.grid(), taus, values)
    }

    /// Constant-in-time field.
    pub fn stationary(field: &ValueField, taus: Vec<f64>) -> Result<Self> {
        let values = vec![field.samples().to_vec(); taus.len()];
        Self::new(*field.grid(), taus, values)
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn slice(&self, j: usize) -> &[f64] {
        &self.values[j]
    }

    pub fn slice_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j]
    }

    pub fn value(&self, j: usize, x: usize) -> f64 {
        self.values[j][x]
    }

    /// Field at τ = 0.
    pub fn initial(&self) -> ValueField {
        ValueField::new(self.grid, self.values[0].clone(), 0.0).expect("validated on construction")
    }

    pub fn add_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().flatten().for_each(|v| *v += c);
        out
    }

    fn check_family(&self, family: &KernelFamily) -> Result<()> {
        self.grid.check_same(family.grid())?;
        if self.taus.iter().any(|t| family.lattice_index(*t).is_err()) {
            return Err(Error::Config("tau lattice is not a subset of the sub-step lattice".into()));
        }
        Ok(())
    }
}

/// Outcome of a sampled domination test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub checked: usize,
    pub violations: usize,
    pub violation_fraction: f64,
    /// Largest u(x,τ) − u(y,s) − Φ_{s,τ}(y,x) over the sample.
    pub max_excess: f64,
}

impl DominationReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Default number of periods scanned for the action potential.
pub const DEFAULT_POTENTIAL_HORIZON: usize = 8;

/// Checks u(x,τ) − u(y,s) ≤ Φ_{s,τ}(y,x) + tol on `sample_pairs` random
/// space-time pairs. The potential is scanned up to `horizon` periods, so
/// a reported violation is always genuine.
pub fn check_domination(
    u: &SpaceTimeField,
    family: &KernelFamily,
    sample_pairs: usize,
    tol: f64,
    horizon: usize,
    seed: u64,
) -> Result<DominationReport> {
    u.check_family(family)?;
    let n = u.grid.node_count();
    let m = u.taus.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // (s index, τ index) -> list of (y, x)
    let mut groups: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for _ in 0..sample_pairs {
        let (js, jt) = (rng.gen_range(0..m), rng.gen_range(0..m));
        let (y, x) = (rng.gen_range(0..n), rng.gen_range(0..n));
        groups.entry((js, jt)).or_default().push((y, x));
    }
    let groups: Vec<_> = groups.into_iter().collect();
    let excesses: Vec<Vec<f64>> = groups
        .par_iter()
        .map(|((js, jt), pairs)| {
            let mut ys: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            ys.sort_unstable();
            ys.dedup();
            let rows = potential_rows(family, ys.clone(), u.taus[*js], u.taus[*jt], horizon)?;
            Ok(pairs
                .iter()
                .map(|(y, x)| {
                    let r = ys.binary_search(y).unwrap();
                    let phi = rows[r * n + x];
                    u.values[*jt][*x] - u.values[*js][*y] - phi
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let flat: Vec<f64> = excesses.into_iter().flatten().collect();
    let violations = flat.iter().filter(|e| **e > tol).count();
    let max_excess = flat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(DominationReport {
        checked: flat.len(),
        violations,
        violation_fraction: if flat.is_empty() { 0.0 } else { violations as f64 / flat.len() as f64 },
        max_excess,
    })
}

/// One backward segment of a calibrated curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSegment {
    pub from_node: usize,
    pub to_node: usize,
    pub t_from: f64,
    pub t_to: f64,
    /// Minimal-lift displacement, one entry per axis.
    pub displacement: Vec<f64>,
    /// Normalized one-step action.
    pub action: f64,
    /// u(to, t_to) − u(from, t_from).
    pub value_drop: f64,
}

/// Backward curve ending at (x, τ), segments listed from the end backwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedPath {
    pub segments: Vec<PathSegment>,
    /// max over segments of |value_drop − action|.
    pub max_defect: f64,
    /// Sum of segment actions in time order.
    pub total_action: f64,
    /// Total value drop from the start of the path to its end.
    pub total_drop: f64,
}

impl CalibratedPath {
    /// Nodes in forward time order.
    pub fn nodes(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.segments.iter().rev().map(|s| s.from_node).collect();
        if let Some(first) = self.segments.first() {
            out.push(first.to_node);
        }
        out
    }
}

/// Backtracks from (x, τ_j) through `span` periods: each step picks the
/// predecessor minimizing u(y, τ − dt) + K̂(y, x) (smallest index on ties),
/// K̂ the sub-kernel plus c·dt. Requires the full sub-step lattice.
pub fn extract_calibrated_curve(
    u: &SpaceTimeField,
    family: &KernelFamily,
    c: f64,
    x: usize,
    tau_index: usize,
    span: usize,
) -> Result<CalibratedPath> {
    u.check_family(family)?;
    let steps = family.steps_per_period();
    if u.taus.len() != steps {
        return Err(Error::Config("calibrated curves need the full sub-step lattice".into()));
    }
    if span < 1 {
        return Err(Error::Config("span must be at least one period".into()));
    }
    if x >= u.grid.node_count() || tau_index >= steps {
        return Err(Error::Config("start point out of range".into()));
    }
    let dt = family.dt();
    let grid = u.grid;
    let mut segments = Vec::with_capacity(span * steps);
    let mut cur = x;
    let mut j = tau_index as i64;
    let mut t = tau_index as f64 * dt;
    for _ in 0..span * steps {
        let jp = (j - 1).rem_euclid(steps as i64) as usize;
        let kernel = family.sub_kernel(jp);
        let prev = &u.values[jp];
        // the column of the sub-kernel ending at `cur`
        let mut best = f64::INFINITY;
        let mut arg = 0usize;
        let mut arg_cost = 0.0;
        for (y, &py) in prev.iter().enumerate() {
            let k = kernel.cost(y, cur) + c * dt;
            let v = py + k;
            if v < best {
                best = v;
                arg = y;
                arg_cost = k;
            }
        }
        let jc = j.rem_euclid(steps as i64) as usize;
        let drop = u.values[jc][cur] - prev[arg];
        let a = grid.node_coords(arg);
        let b = grid.node_coords(cur);
        let displacement = (0..grid.dim()).map(|i| minimal_component(b[i] - a[i])).collect();
        segments.push(PathSegment {
            from_node: arg,
            to_node: cur,
            t_from: t - dt,
            t_to: t,
            displacement,
            action: arg_cost,
            value_drop: drop,
        });
        cur = arg;
        j -= 1;
        t -= dt;
    }
    let max_defect = segments.iter().fold(0.0f64, |m, s| m.max((s.value_drop - s.action).abs()));
    let total_action = segments.iter().rev().map(|s| s.action).sum();
    let total_drop = segments.iter().rev().map(|s| s.value_drop).sum();
    Ok(CalibratedPath { segments, max_defect, total_action, total_drop })
}

/// Nodes with h_{τ,τ}(x,x) ≤ tol.
pub fn aubry_set(family: &KernelFamily, tau: f64, window_n: usize, tol: f64) -> Result<Vec<usize>> {
    let diag = barrier_diagonal(family, tau, window_n)?;
    Ok(aubry_from_diagonal(&diag, tol))
}

/// h_{τ,τ}(x,x) for every node.
pub fn barrier_diagonal(family: &KernelFamily, tau: f64, window_n: usize) -> Result<Vec<f64>> {
    if family.has_dense_period() {
        return Ok(peierls_barrier(family, tau, tau, window_n)?.diagonal());
    }
    (0..family.grid().node_count())
        .into_par_iter()
        .map(|x| Ok(barrier_row(family, x, tau, tau, window_n)?[x]))
        .collect()
}

pub fn aubry_from_diagonal(diag: &[f64], tol: f64) -> Vec<usize> {
    diag.iter().enumerate().filter(|(_, v)| **v <= tol).map(|(i, _)| i).collect()
}

/// Connected components of h(x,y) + h(y,x) ≤ tol among `nodes`; classes
/// and their members are sorted by node index.
pub fn static_classes(table: &BarrierTable, nodes: &[usize], tol: f64) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut c = i;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    for a in 0..nodes.len() {
        for b in a + 1..nodes.len() {
            let (x, y) = (nodes[a], nodes[b]);
            if table.get(x, y) + table.get(y, x) <= tol {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..nodes.len() {
        let r = find(&mut parent, i);
        classes.entry(r).or_default().push(nodes[i]);
    }
    let mut out: Vec<Vec<usize>> = classes.into_values().collect();
    out.iter_mut().for_each(|c| c.sort_unstable());
    out.sort();
    out
}

/// u_f(x, τ) = min_p f(p) + h_{0,τ}(p, x) over the representative nodes p,
/// for every τ in the lattice.
pub fn weak_kam_from_trace(
    trace: &[(usize, f64)],
    family: &KernelFamily,
    taus: &[f64],
    window_n: usize,
) -> Result<SpaceTimeField> {
    if trace.is_empty() {
        return Err(Error::EmptyRepresentatives);
    }
    let n = family.grid().node_count();
    if trace.iter().any(|(p, _)| *p >= n) {
        return Err(Error::Config("representative node out of range".into()));
    }
    let values = taus
        .par_iter()
        .map(|&tau| {
            let mut acc = vec![f64::INFINITY; n];
            for &(p, fp) in trace {
                let row = barrier_row(family, p, 0.0, tau, window_n)?;
                for (a, h) in acc.iter_mut().zip(&row) {
                    let v = fp + h;
                    if v < *a {
                        *a = v;
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    SpaceTimeField::new(*family.grid(), taus.to_vec(), values)
}

/// Summary written by verification runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub violations: usize,
    pub checked: usize,
    pub max_excess: f64,
    pub max_defect: f64,
    pub aubry_nodes: Vec<usize>,
    pub classes: Vec<Vec<usize>>,
    pub passed: bool,
}
