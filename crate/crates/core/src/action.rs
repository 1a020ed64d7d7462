//! Discrete minimal action: one-step kernels, min-plus composition, the
//! per-period kernel cache, action potentials and windowed barriers.
//!
//! Kernel entries are `cost[y][x]`, the cost of going from node `y` to node
//! `x`. Pairs outside the velocity cap cost [`SENTINEL`]; composed entries
//! saturate there so the (min, +) algebra stays total and exact.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::models::LagrangianModel;

/// Cost of a displacement beyond the velocity cap.
pub const SENTINEL: f64 = 1.0e6;

/// Default velocity cap.
pub const DEFAULT_V_MAX: f64 = 4.0;

/// Default sub-step (20 per period).
pub const DEFAULT_DT: f64 = 0.05;

/// Largest node count for which dense period kernels and full pairwise
/// tables are built.
pub const DENSE_LIMIT: usize = 512;

const TIME_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// Row-major `[y * n + x]`.
    Dense(Vec<f64>),
    /// Entries grouped by target column `x`, sources ascending.
    Sparse {
        offsets: Vec<usize>,
        sources: Vec<u32>,
        costs: Vec<f64>,
    },
}

/// Approximate F_{t_start, t_end}(y, x) between all node pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionKernel {
    grid: PeriodicGrid,
    t_start: f64,
    t_end: f64,
    storage: Storage,
}

#[inline]
fn fold_min(acc: &mut [f64], a: f64, row: &[f64]) {
    for (o, r) in acc.iter_mut().zip(row) {
        let v = a + r;
        *o = if v < *o { v } else { *o };
    }
}

fn saturate(values: &mut [f64]) {
    for v in values {
        if *v > SENTINEL {
            *v = SENTINEL;
        }
    }
}

impl ActionKernel {
    /// Builds a kernel from a row-major cost table.
    pub fn from_dense(grid: PeriodicGrid, t_start: f64, t_end: f64, costs: Vec<f64>) -> Result<Self> {
        let n = grid.node_count();
        if costs.len() != n * n {
            return Err(Error::GridMismatch(format!("cost table has {} entries, expected {}", costs.len(), n * n)));
        }
        Ok(Self { grid, t_start, t_end, storage: Storage::Dense(costs) })
    }

    /// Zero on the diagonal, sentinel elsewhere.
    pub fn identity(grid: PeriodicGrid, t: f64) -> Self {
        let n = grid.node_count();
        let mut costs = vec![SENTINEL; n * n];
        for i in 0..n {
            costs[i * n + i] = 0.0;
        }
        Self { grid, t_start: t, t_end: t, storage: Storage::Dense(costs) }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn cost(&self, y: usize, x: usize) -> f64 {
        match &self.storage {
            Storage::Dense(c) => c[y * self.grid.node_count() + x],
            Storage::Sparse { offsets, sources, costs } => {
                let range = offsets[x]..offsets[x + 1];
                match sources[range.clone()].binary_search(&(y as u32)) {
                    Ok(pos) => costs[range.start + pos],
                    Err(_) => SENTINEL,
                }
            }
        }
    }

    /// Row-major copy of the full table.
    pub fn to_dense(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(c) => c.clone(),
            Storage::Sparse { offsets, sources, costs } => {
                let n = self.grid.node_count();
                let mut out = vec![SENTINEL; n * n];
                for x in 0..n {
                    for e in offsets[x]..offsets[x + 1] {
                        out[sources[e] as usize * n + x] = costs[e];
                    }
                }
                out
            }
        }
    }

    fn densified(&self) -> Self {
        Self {
            grid: self.grid,
            t_start: self.t_start,
            t_end: self.t_end,
            storage: Storage::Dense(self.to_dense()),
        }
    }

    /// out(x) = min_y u(y) + cost[y][x]; with `saturated` the result is
    /// clipped at the sentinel, which is how kernel rows are propagated.
    pub fn apply(&self, u: &[f64], saturated: bool) -> Vec<f64> {
        let n = self.grid.node_count();
        let mut out = match &self.storage {
            Storage::Dense(c) => {
                let mut acc = vec![f64::INFINITY; n];
                for (y, &uy) in u.iter().enumerate() {
                    fold_min(&mut acc, uy, &c[y * n..(y + 1) * n]);
                }
                acc
            }
            Storage::Sparse { offsets, sources, costs } => {
                let floor = u.iter().fold(f64::INFINITY, |m, &v| if v < m { v } else { m }) + SENTINEL;
                (0..n)
                    .map(|x| {
                        let mut best = floor;
                        for e in offsets[x]..offsets[x + 1] {
                            let v = u[sources[e] as usize] + costs[e];
                            if v < best {
                                best = v;
                            }
                        }
                        best
                    })
                    .collect()
            }
        };
        if saturated {
            saturate(&mut out);
        }
        out
    }

    /// Like [`apply`](Self::apply) without saturation, also returning the
    /// minimizing source per target (smallest index on ties).
    pub fn apply_with_argmin(&self, u: &[f64]) -> (Vec<f64>, Vec<usize>) {
        let n = self.grid.node_count();
        match &self.storage {
            Storage::Dense(c) => {
                let mut best = vec![f64::INFINITY; n];
                let mut arg = vec![0usize; n];
                for (y, &uy) in u.iter().enumerate() {
                    let row = &c[y * n..(y + 1) * n];
                    for x in 0..n {
                        let v = uy + row[x];
                        if v < best[x] {
                            best[x] = v;
                            arg[x] = y;
                        }
                    }
                }
                (best, arg)
            }
            Storage::Sparse { offsets, sources, costs } => {
                let (mut umin, mut uarg) = (f64::INFINITY, 0usize);
                for (i, &v) in u.iter().enumerate() {
                    if v < umin {
                        umin = v;
                        uarg = i;
                    }
                }
                let mut best = vec![0.0; n];
                let mut arg = vec![0usize; n];
                for x in 0..n {
                    let (mut b, mut a) = (f64::INFINITY, usize::MAX);
                    for e in offsets[x]..offsets[x + 1] {
                        let v = u[sources[e] as usize] + costs[e];
                        if v < b {
                            b = v;
                            a = sources[e] as usize;
                        }
                    }
                    let fallback = umin + SENTINEL;
                    if fallback < b || (fallback == b && uarg < a) {
                        b = fallback;
                        a = uarg;
                    }
                    best[x] = b;
                    arg[x] = a;
                }
                (best, arg)
            }
        }
    }
}

/// Sparse kernel for one sub-step of length `dt` starting at `t`:
/// dt·L(midpoint, Δ/dt, t + dt/2) for every lattice displacement with
/// ‖Δ‖ ≤ v_max·dt.
pub fn one_step_kernel(
    model: &LagrangianModel,
    grid: &PeriodicGrid,
    t: f64,
    dt: f64,
    v_max: f64,
) -> Result<ActionKernel> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    if model.dim() != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "model is {}-dimensional, grid is {}-dimensional",
            model.dim(),
            grid.dim()
        )));
    }
    let reach = v_max * dt;
    let h = grid.spacing();
    if reach < h {
        return Err(Error::DisconnectedKernel { reach, spacing: h });
    }
    let dim = grid.dim();
    let m = (reach / h).floor() as i64;
    let mut shifts: Vec<[i64; 2]> = Vec::new();
    let second = if dim == 2 { m } else { 0 };
    for a in -m..=m {
        for b in -second..=second {
            let d2 = ((a * a + b * b) as f64) * h * h;
            if d2 <= reach * reach * (1.0 + 1e-12) {
                shifts.push([a, b]);
            }
        }
    }
    let n = grid.node_count();
    let t_mid = t + 0.5 * dt;
    let columns: Vec<Vec<(u32, f64)>> = (0..n)
        .into_par_iter()
        .map(|x| {
            let xi = grid.axis_indices(x);
            let xc = grid.node_coords(x);
            let mut entries: Vec<(u32, f64)> = shifts
                .iter()
                .map(|s| {
                    let y = grid.wrap_index([xi[0] as i64 - s[0], xi[1] as i64 - s[1]]);
                    let delta = [s[0] as f64 * h, s[1] as f64 * h];
                    let mid = [xc[0] - 0.5 * delta[0], xc[1] - 0.5 * delta[1]];
                    let vel = [delta[0] / dt, delta[1] / dt];
                    (y as u32, dt * model.lagrangian(&mid[..dim], &vel[..dim], t_mid))
                })
                .collect();
            entries.sort_by(|p, q| p.0.cmp(&q.0).then(p.1.total_cmp(&q.1)));
            // aliased lifts on coarse grids: keep the cheapest
            entries.dedup_by_key(|e| e.0);
            entries
        })
        .collect();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut sources = Vec::new();
    let mut costs = Vec::new();
    offsets.push(0);
    for col in columns {
        for (s, c) in col {
            sources.push(s);
            costs.push(c.min(SENTINEL));
        }
        offsets.push(sources.len());
    }
    Ok(ActionKernel {
        grid: *grid,
        t_start: t,
        t_end: t + dt,
        storage: Storage::Sparse { offsets, sources, costs },
    })
}

/// Min-plus product: cost[y][x] = min_z K1[y][z] + K2[z][x], saturated at
/// the sentinel. The result is dense.
pub fn compose(k1: &ActionKernel, k2: &ActionKernel) -> Result<ActionKernel> {
    k1.grid.check_same(&k2.grid)?;
    if (k1.t_end - k2.t_start).abs() > TIME_SLACK {
        return Err(Error::IntervalMismatch { left_end: k1.t_end, right_start: k2.t_start });
    }
    Ok(product(k1, k2))
}

// Autonomous families share one sub-kernel across phases, so the period
// fold skips the interval check.
fn product(k1: &ActionKernel, k2: &ActionKernel) -> ActionKernel {
    let left = if k1.is_dense() { k1.clone() } else { k1.densified() };
    let Storage::Dense(a) = &left.storage else { unreachable!() };
    let n = k1.grid.node_count();
    let rows: Vec<f64> = a
        .par_chunks(n)
        .flat_map_iter(|row| k2.apply(row, true))
        .collect();
    ActionKernel {
        grid: k1.grid,
        t_start: k1.t_start,
        t_end: k2.t_end,
        storage: Storage::Dense(rows),
    }
}

/// Minimum cycle mean of a dense weighted digraph (Karp).
pub fn min_mean_cycle(costs: &[f64], n: usize) -> f64 {
    // d[k][v]: cheapest walk of exactly k edges ending at v from anywhere
    let mut d = vec![f64::INFINITY; (n + 1) * n];
    d[..n].fill(0.0);
    for k in 1..=n {
        let (prev, cur) = d.split_at_mut(k * n);
        let prev = &prev[(k - 1) * n..];
        let cur = &mut cur[..n];
        for (u, &pu) in prev.iter().enumerate() {
            fold_min(cur, pu, &costs[u * n..(u + 1) * n]);
        }
    }
    let last = &d[n * n..];
    let mut best = f64::INFINITY;
    for v in 0..n {
        if !last[v].is_finite() {
            continue;
        }
        let mut worst = f64::NEG_INFINITY;
        for k in 0..n {
            let dk = d[k * n + v];
            if dk.is_finite() {
                worst = worst.max((last[v] - dk) / (n - k) as f64);
            }
        }
        best = best.min(worst);
    }
    best
}

/// Cached kernels of one model on one grid: the sub-kernel at every phase
/// of the period, dense period kernels per starting phase (small grids
/// only) and the discrete critical value.
#[derive(Debug)]
pub struct KernelFamily {
    model: LagrangianModel,
    grid: PeriodicGrid,
    dt: f64,
    v_max: f64,
    steps: usize,
    sub: Vec<Arc<ActionKernel>>,
    periods: Mutex<HashMap<usize, Arc<ActionKernel>>>,
    critical: OnceLock<Option<f64>>,
}

impl KernelFamily {
    pub fn new(model: &LagrangianModel, grid: &PeriodicGrid, dt: f64, v_max: f64) -> Result<Arc<Self>> {
        if !(dt > 0.0 && dt <= 1.0) {
            return Err(Error::Config(format!("dt must lie in (0, 1], got {dt}")));
        }
        let steps = (1.0 / dt).round() as usize;
        if ((steps as f64) * dt - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("1/dt must be an integer, got dt = {dt}")));
        }
        let dt = 1.0 / steps as f64;
        let sub = if model.is_autonomous() {
            let k = Arc::new(one_step_kernel(model, grid, 0.0, dt, v_max)?);
            vec![k; steps]
        } else {
            (0..steps)
                .map(|j| one_step_kernel(model, grid, j as f64 * dt, dt, v_max).map(Arc::new))
                .collect::<Result<_>>()?
        };
        Ok(Arc::new(Self {
            model: model.clone(),
            grid: *grid,
            dt,
            v_max,
            steps,
            sub,
            periods: Mutex::new(HashMap::new()),
            critical: OnceLock::new(),
        }))
    }

    pub fn model(&self) -> &LagrangianModel {
        &self.model
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    /// Sub-steps per period.
    pub fn steps_per_period(&self) -> usize {
        self.steps
    }

    pub fn has_dense_period(&self) -> bool {
        self.grid.node_count() <= DENSE_LIMIT
    }

    /// Sub-kernel starting at phase `j·dt` (j taken modulo the period).
    pub fn sub_kernel(&self, j: usize) -> &ActionKernel {
        &self.sub[j % self.steps]
    }

    /// Lattice index of a time; time-dependent models require `t` on the
    /// sub-step lattice.
    pub fn lattice_index(&self, t: f64) -> Result<i64> {
        let s = t * self.steps as f64;
        let j = s.round();
        if (s - j).abs() > 1e-6 {
            return Err(Error::Config(format!("time {t} is not on the sub-step lattice of spacing {}", self.dt)));
        }
        Ok(j as i64)
    }

    fn phase(&self, j: i64) -> usize {
        j.rem_euclid(self.steps as i64) as usize
    }

    /// Dense kernel over one period starting at phase `j·dt`, composed as a
    /// left fold of the sub-kernels. `None` on grids above [`DENSE_LIMIT`].
    pub fn period_kernel(&self, j: usize) -> Option<Arc<ActionKernel>> {
        if !self.has_dense_period() {
            return None;
        }
        let j = j % self.steps;
        let key = if self.model.is_autonomous() { 0 } else { j };
        if let Some(k) = self.periods.lock().unwrap().get(&key) {
            return Some(k.clone());
        }
        let mut acc = self.sub[key].densified();
        for i in 1..self.steps {
            acc = product(&acc, &self.sub[(key + i) % self.steps]);
        }
        let origin = key as f64 * self.dt;
        acc.t_start = origin;
        acc.t_end = origin + 1.0;
        let k = Arc::new(acc);
        self.periods.lock().unwrap().insert(key, k.clone());
        Some(k)
    }

    /// Exact discrete critical value c = −(minimum cycle mean per period)
    /// of the period kernel; `None` when no dense period kernel exists.
    pub fn critical_value(&self) -> Option<f64> {
        *self.critical.get_or_init(|| {
            let p = self.period_kernel(0)?;
            let Storage::Dense(c) = &p.storage else { unreachable!() };
            // + 0.0 turns a negative zero into a positive one
            Some(-min_mean_cycle(c, self.grid.node_count()) + 0.0)
        })
    }

    /// Pushes `u` (a field or a saturated kernel row) forward over
    /// `[t0, t1]`: whole periods through the dense period kernel when one
    /// is available and the start is phase aligned, otherwise sub-step by
    /// sub-step.
    pub fn propagate(&self, u: &[f64], t0: f64, t1: f64, saturated: bool) -> Result<Vec<f64>> {
        let j0 = self.lattice_index(t0)?;
        let j1 = self.lattice_index(t1)?;
        if j1 < j0 {
            return Err(Error::Config(format!("interval [{t0}, {t1}] runs backwards")));
        }
        let mut cur = u.to_vec();
        let mut j = j0;
        let steps = self.steps as i64;
        while j < j1 {
            if j1 - j >= steps {
                if let Some(p) = self.period_kernel(self.phase(j)) {
                    cur = p.apply(&cur, saturated);
                    j += steps;
                    continue;
                }
            }
            cur = self.sub[self.phase(j)].apply(&cur, saturated);
            j += 1;
        }
        Ok(cur)
    }

    /// Row `y` of F_{t0,t1}: F(y, x) for every x.
    pub fn action_row(&self, y: usize, t0: f64, t1: f64) -> Result<Vec<f64>> {
        let n = self.grid.node_count();
        if y >= n {
            return Err(Error::Config(format!("node {y} out of range")));
        }
        let mut delta = vec![SENTINEL; n];
        delta[y] = 0.0;
        self.propagate(&delta, t0, t1, true)
    }

    /// F_{t0,t1}(y, x).
    pub fn min_action(&self, y: usize, x: usize, t0: f64, t1: f64) -> Result<f64> {
        if x >= self.grid.node_count() {
            return Err(Error::Config(format!("node {x} out of range")));
        }
        let gap = self.lattice_index(t1)? - self.lattice_index(t0)?;
        if gap <= 0 {
            return Err(Error::Config("(t1 - t0)/dt must be a positive integer".into()));
        }
        Ok(self.action_row(y, t0, t1)?[x])
    }

    /// Normalization constant added per unit time: the discrete critical
    /// value when known, else zero.
    fn normalizer(&self) -> f64 {
        self.critical_value().unwrap_or(0.0)
    }
}

/// F_{t0,t1}(y, x) from scratch (builds a kernel family).
#[allow(clippy::too_many_arguments)]
pub fn min_action(
    model: &LagrangianModel,
    grid: &PeriodicGrid,
    y: usize,
    x: usize,
    t0: f64,
    t1: f64,
    dt: f64,
    v_max: f64,
) -> Result<f64> {
    KernelFamily::new(model, grid, dt, v_max)?.min_action(y, x, t0, t1)
}

/// Windowed barrier h_{τ,τ'} over all node pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierTable {
    pub grid: PeriodicGrid,
    pub tau: f64,
    pub tau_prime: f64,
    pub window_n: usize,
    /// Critical value added per unit time before taking minima.
    pub normalization: f64,
    /// Row-major `h[y * n + x]`.
    pub values: Vec<f64>,
}

impl BarrierTable {
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.values[y * self.grid.node_count() + x]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let n = self.grid.node_count();
        (0..n).map(|i| self.values[i * n + i]).collect()
    }

    /// x ↦ min_y u(y) + h(y, x).
    pub fn represent(&self, u: &[f64]) -> Vec<f64> {
        let n = self.grid.node_count();
        let mut acc = vec![f64::INFINITY; n];
        for (y, &uy) in u.iter().enumerate() {
            fold_min(&mut acc, uy, &self.values[y * n..(y + 1) * n]);
        }
        acc
    }
}

/// Smallest integer k for which the gap τ' + k − τ is at least one period.
pub fn first_admissible_k(tau: f64, tau_prime: f64) -> usize {
    if tau_prime >= tau {
        1
    } else {
        2
    }
}

/// Scan state shared by the potential and barrier computations: the table
/// F_{τ, τ'+k} for k = k_start, k_start+1, ... with normalization applied
/// at record time.
struct TimeScan<'a> {
    family: &'a KernelFamily,
    cur: Vec<f64>,
    k: usize,
    tau: f64,
    tau_prime: f64,
}

impl<'a> TimeScan<'a> {
    fn start(family: &'a KernelFamily, rows: Vec<usize>, tau: f64, tau_prime: f64, k: usize) -> Result<Self> {
        let n = family.grid.node_count();
        let j0 = family.lattice_index(tau)?;
        let j1 = family.lattice_index(tau_prime + k as f64)?;
        let cur = rows
            .par_iter()
            .map(|&y| {
                let mut delta = vec![SENTINEL; n];
                delta[y] = 0.0;
                family.propagate(&delta, j0 as f64 * family.dt, j1 as f64 * family.dt, true)
            })
            .collect::<Result<Vec<_>>>()?
            .concat();
        Ok(Self { family, cur, k, tau, tau_prime })
    }

    fn gap(&self) -> f64 {
        self.tau_prime + self.k as f64 - self.tau
    }

    /// Normalized values at the current k.
    fn normalized(&self) -> impl Iterator<Item = f64> + '_ {
        let shift = self.family.normalizer() * self.gap();
        self.cur.iter().map(move |v| v + shift)
    }

    fn advance(&mut self) {
        let n = self.family.grid.node_count();
        let family = self.family;
        let t = self.tau_prime + self.k as f64;
        self.cur = self
            .cur
            .par_chunks(n)
            .flat_map_iter(|row| family.propagate(row, t, t + 1.0, true).expect("lattice aligned"))
            .collect();
        self.k += 1;
    }
}

fn all_rows(grid: &PeriodicGrid) -> Vec<usize> {
    (0..grid.node_count()).collect()
}

// One scan over k = min(k_min, n)..=max(horizon, 2n), recording the
// potential (k ≥ k_min) and the window minimum (n ≤ k ≤ 2n) from the same
// normalized values.
fn scan_rows(
    family: &KernelFamily,
    rows: Vec<usize>,
    s: f64,
    tau: f64,
    window_n: usize,
    horizon: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if window_n < 1 {
        return Err(Error::Config("window_n must be at least 1".into()));
    }
    let k_min = first_admissible_k(s, tau);
    let k_end = horizon.max(2 * window_n);
    let count = rows.len() * family.grid.node_count();
    let mut phi = vec![f64::INFINITY; count];
    let mut h = vec![f64::INFINITY; count];
    let mut scan = TimeScan::start(family, rows, s, tau, k_min.min(window_n))?;
    loop {
        let k = scan.k;
        let in_phi = k >= k_min && k <= horizon;
        let in_window = k >= window_n && k <= 2 * window_n;
        if in_phi || in_window {
            for (i, v) in scan.normalized().enumerate() {
                if in_phi && v < phi[i] {
                    phi[i] = v;
                }
                if in_window && v < h[i] {
                    h[i] = v;
                }
            }
        }
        if k >= k_end {
            break;
        }
        scan.advance();
    }
    Ok((phi, h))
}

/// Action potential Φ_{s,τ} (gaps τ + k − s ≥ 1, k ≤ horizon) and the
/// windowed barrier h_{s,τ} over all pairs, from a single scan so that
/// Φ ≤ h holds bit for bit when horizon ≥ 2n. Both are normalized by the
/// discrete critical value.
pub fn potential_and_barrier(
    family: &KernelFamily,
    s: f64,
    tau: f64,
    window_n: usize,
    horizon: usize,
) -> Result<(Vec<f64>, BarrierTable)> {
    let (phi, h) = scan_rows(family, all_rows(&family.grid), s, tau, window_n, horizon)?;
    let table = BarrierTable {
        grid: family.grid,
        tau: s,
        tau_prime: tau,
        window_n,
        normalization: family.normalizer(),
        values: h,
    };
    Ok((phi, table))
}

/// h_{τ,τ'}(y, x) = min over k ∈ [n, 2n] of the normalized F_{τ,τ'+k}(y, x)
/// for all pairs.
pub fn peierls_barrier(family: &KernelFamily, tau: f64, tau_prime: f64, window_n: usize) -> Result<BarrierTable> {
    Ok(potential_and_barrier(family, tau, tau_prime, window_n, 0)?.1)
}

/// Row `y` of the windowed barrier, computed by propagating a delta field;
/// used on grids too large for a full table.
pub fn barrier_row(family: &KernelFamily, y: usize, tau: f64, tau_prime: f64, window_n: usize) -> Result<Vec<f64>> {
    Ok(scan_rows(family, vec![y], tau, tau_prime, window_n, 0)?.1)
}

/// Rows of Φ_{s,τ} for the given sources, scanning gaps up to `horizon`.
pub fn potential_rows(family: &KernelFamily, rows: Vec<usize>, s: f64, tau: f64, horizon: usize) -> Result<Vec<f64>> {
    let k_min = first_admissible_k(s, tau);
    Ok(scan_rows(family, rows, s, tau, k_min, horizon.max(k_min))?.0)
}

/// Φ_{s,τ}(y, x): the normalized minimal action over gaps τ + k − s ≥ 1,
/// k up to `horizon`.
pub fn action_potential(family: &KernelFamily, y: usize, s: f64, x: usize, tau: f64, horizon: usize) -> Result<f64> {
    if horizon < 1 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    Ok(potential_rows(family, vec![y], s, tau, horizon)?[x])
}
