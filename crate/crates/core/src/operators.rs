//! Lax-Oleinik iteration on the kernel family: single steps, the period
//! map, the two windowed operators, critical-value probes and fixed points.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::action::{ActionKernel, KernelFamily};
use crate::error::{Error, Result};
use crate::grid::{sup_distance, ValueField};

/// Un-normalized iterates beyond this magnitude abort the evolution.
pub const OVERFLOW_GUARD: f64 = 1.0e9;

/// Periods used for the initial critical-value probe when no exact
/// discrete value is available.
pub const DEFAULT_PROBE_PERIODS: usize = 16;

/// (Tu)(x) = min_y u(y) + K[y][x]; the time tag advances by K's interval.
pub fn lo_step(u: &ValueField, kernel: &ActionKernel) -> Result<ValueField> {
    u.grid().check_same(kernel.grid())?;
    let out = kernel.apply(u.samples(), false);
    Ok(ValueField::new(*u.grid(), out, u.time_tag() + kernel.t_end() - kernel.t_start())?)
}

/// One row of a residual history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub t: f64,
    pub residual: f64,
    pub c_estimate: f64,
}

/// Result of a critical-value probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalEstimate {
    pub value: f64,
    pub half_value: f64,
    pub t_probe: f64,
}

/// Minimizer bookkeeping for a traced period step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    /// Argmin source per target, one vector per stage.
    pub argmins: Vec<Vec<usize>>,
}

/// Iteration state: the current field, the lattice time and the running
/// critical-value estimate.
#[derive(Debug, Clone)]
pub struct EvolutionState {
    family: Arc<KernelFamily>,
    current: ValueField,
    start_index: i64,
    step_count: usize,
    c_estimate: f64,
    history: Vec<HistoryRow>,
}

fn fmin(a: &[f64]) -> f64 {
    a.iter().copied().fold(f64::INFINITY, f64::min)
}

fn node_min(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        if *b < *a {
            *a = *b;
        }
    }
}

impl EvolutionState {
    /// Starts from `u0` at its time tag (which must lie on the sub-step
    /// lattice). The critical value comes from the exact discrete value
    /// when the family has a dense period kernel, else from a probe.
    pub fn new(family: Arc<KernelFamily>, u0: ValueField) -> Result<Self> {
        family.grid().check_same(u0.grid())?;
        let start_index = family.lattice_index(u0.time_tag())?;
        let mut state = Self {
            family,
            current: u0,
            start_index,
            step_count: 0,
            c_estimate: 0.0,
            history: Vec::new(),
        };
        state.c_estimate = match state.family.critical_value() {
            Some(c) => c,
            None => {
                let est = state.probe(DEFAULT_PROBE_PERIODS)?;
                est.value
            }
        };
        Ok(state)
    }

    pub fn family(&self) -> &Arc<KernelFamily> {
        &self.family
    }

    pub fn current(&self) -> &ValueField {
        &self.current
    }

    /// Sub-steps taken since construction.
    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn c_estimate(&self) -> f64 {
        self.c_estimate
    }

    pub fn set_c_estimate(&mut self, c: f64) {
        self.c_estimate = c;
    }

    pub fn history(&self) -> &[HistoryRow] {
        &self.history
    }

    /// Elapsed time since construction.
    pub fn elapsed(&self) -> f64 {
        self.step_count as f64 * self.family.dt()
    }

    fn phase(&self) -> usize {
        let steps = self.family.steps_per_period() as i64;
        (self.start_index + self.step_count as i64).rem_euclid(steps) as usize
    }

    /// Dense period kernel at the current phase, when available.
    pub fn period_kernel(&self) -> Option<Arc<ActionKernel>> {
        self.family.period_kernel(self.phase())
    }

    /// The sub-kernels of one period starting at the current phase.
    pub fn sub_kernels(&self) -> Vec<&ActionKernel> {
        let p = self.phase();
        (0..self.family.steps_per_period()).map(|i| self.family.sub_kernel(p + i)).collect()
    }

    /// One period map from `phase`, optionally adding c per period.
    fn period_map(&self, u: &[f64], phase: usize, shift: f64) -> Vec<f64> {
        let mut out = match self.family.period_kernel(phase) {
            Some(p) => p.apply(u, false),
            None => {
                let mut cur = u.to_vec();
                for i in 0..self.family.steps_per_period() {
                    cur = self.family.sub_kernel(phase + i).apply(&cur, false);
                }
                cur
            }
        };
        if shift != 0.0 {
            out.iter_mut().for_each(|v| *v += shift);
        }
        out
    }

    /// Period map with minimizers; stages are the dense period kernel or
    /// the sub-kernels in order.
    fn period_map_traced(&self, u: &[f64], phase: usize, shift: f64) -> (Vec<f64>, StepTrace) {
        let mut argmins = Vec::new();
        let mut out = match self.family.period_kernel(phase) {
            Some(p) => {
                let (v, a) = p.apply_with_argmin(u);
                argmins.push(a);
                v
            }
            None => {
                let mut cur = u.to_vec();
                for i in 0..self.family.steps_per_period() {
                    let (v, a) = self.family.sub_kernel(phase + i).apply_with_argmin(&cur);
                    argmins.push(a);
                    cur = v;
                }
                cur
            }
        };
        if shift != 0.0 {
            out.iter_mut().for_each(|v| *v += shift);
        }
        (out, StepTrace { argmins })
    }

    fn stage_kernels(&self, phase: usize) -> Vec<Arc<ActionKernel>> {
        match self.family.period_kernel(phase) {
            Some(p) => vec![p],
            None => (0..self.family.steps_per_period())
                .map(|i| Arc::new(self.family.sub_kernel(phase + i).clone()))
                .collect(),
        }
    }

    /// Applies the period map `periods` times. With `normalize` the running
    /// critical value is added per period so iterates stay bounded.
    pub fn evolve(&mut self, periods: usize, normalize: bool) -> Result<()> {
        let shift = if normalize { self.c_estimate } else { 0.0 };
        let phase = self.phase();
        let mut cur = self.current.samples().to_vec();
        for _ in 0..periods {
            cur = self.period_map(&cur, phase, shift);
            if !normalize {
                let big = cur.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if big > OVERFLOW_GUARD {
                    return Err(Error::Overflow(big));
                }
            }
        }
        self.step_count += periods * self.family.steps_per_period();
        self.current = ValueField::new(*self.current.grid(), cur, self.current.time_tag())?;
        Ok(())
    }

    /// Node-wise minimum of the normalized iterates P^k u for n ≤ k ≤ 2n,
    /// keeping only the running minimum and the current iterate.
    pub fn window_min_from(&self, u: &[f64], n: usize) -> Vec<f64> {
        let phase = self.phase();
        let c = self.c_estimate;
        let mut cur = u.to_vec();
        for _ in 0..n {
            cur = self.period_map(&cur, phase, c);
        }
        let mut best = cur.clone();
        for _ in n..2 * n {
            cur = self.period_map(&cur, phase, c);
            node_min(&mut best, &cur);
        }
        best
    }

    /// Pushes `u` through the sub-kernels covering `[0, tau)` of the period
    /// (relative to the current phase), adding c·dt per sub-step.
    fn partial_chain(&self, u: Vec<f64>, tau: f64) -> Result<(Vec<f64>, usize)> {
        if !(0.0..1.0).contains(&tau) {
            return Err(Error::Config(format!("tau must lie in [0, 1), got {tau}")));
        }
        let m = self.family.lattice_index(tau)? as usize;
        let phase = self.phase();
        let shift = self.c_estimate * self.family.dt();
        let mut cur = u;
        for i in 0..m {
            cur = self.family.sub_kernel(phase + i).apply(&cur, false);
            if shift != 0.0 {
                cur.iter_mut().for_each(|v| *v += shift);
            }
        }
        Ok((cur, m))
    }

    /// Windowed operator for time-periodic models: the normalized window
    /// minimum over k ∈ [n, 2n] followed by the partial chain up to τ.
    pub fn window_min_periodic(&self, n: usize, tau: f64) -> Result<ValueField> {
        let best = self.window_min_from(self.current.samples(), n);
        let (out, _) = self.partial_chain(best, tau)?;
        ValueField::new(*self.current.grid(), out, self.current.time_tag() + tau)
    }

    /// As [`window_min_periodic`](Self::window_min_periodic), also
    /// reporting per node the window index k₀ and the minimizing node chain
    /// (one node per stage, ending at the target), plus a reassembly of the
    /// value from the chain.
    pub fn window_min_periodic_traced(&self, n: usize, tau: f64) -> Result<WindowTrace> {
        let phase = self.phase();
        let c = self.c_estimate;
        let u0 = self.current.samples().to_vec();
        let nodes = u0.len();
        let mut traces = Vec::with_capacity(2 * n);
        let mut cur = u0.clone();
        let mut best = vec![f64::INFINITY; nodes];
        let mut best_k = vec![0usize; nodes];
        for k in 0..=2 * n {
            if k >= n {
                for x in 0..nodes {
                    if cur[x] < best[x] {
                        best[x] = cur[x];
                        best_k[x] = k;
                    }
                }
            }
            if k < 2 * n {
                let (next, tr) = self.period_map_traced(&cur, phase, c);
                traces.push(tr);
                cur = next;
            }
        }
        // partial chain with minimizers
        let m = self.family.lattice_index(tau)? as usize;
        let sub_shift = c * self.family.dt();
        let mut partial = Vec::with_capacity(m);
        let mut value = best;
        for i in 0..m {
            let (v, a) = self.family.sub_kernel(phase + i).apply_with_argmin(&value);
            partial.push(a);
            value = v;
            if sub_shift != 0.0 {
                value.iter_mut().for_each(|v| *v += sub_shift);
            }
        }
        Ok(WindowTrace {
            values: value,
            best_k,
            traces,
            partial,
            stages: self.stage_kernels(phase),
            partial_kernels: (0..m).map(|i| Arc::new(self.family.sub_kernel(phase + i).clone())).collect(),
            period_shift: c,
            sub_shift,
            initial: u0,
        })
    }

    /// Windowed operator for autonomous models: node-wise minimum of T_σ u
    /// over σ ∈ [t, 2t] on the sub-step lattice (`sublattice` steps per
    /// unit time, which must match the family).
    pub fn window_min_autonomous(&self, t: f64, sublattice: usize) -> Result<ValueField> {
        Ok(self.window_min_autonomous_traced(t, sublattice)?.0)
    }

    /// Also returns, per node, the lattice index of the minimizing σ.
    pub fn window_min_autonomous_traced(&self, t: f64, sublattice: usize) -> Result<(ValueField, Vec<usize>)> {
        if !self.family.model().is_autonomous() {
            return Err(Error::Config("the continuous window needs an autonomous model".into()));
        }
        if sublattice != self.family.steps_per_period() {
            return Err(Error::Config(format!(
                "sub-lattice of {sublattice} steps per unit time does not match the kernel family ({})",
                self.family.steps_per_period()
            )));
        }
        if !(t >= 0.0) {
            return Err(Error::Config(format!("window start must be non-negative, got {t}")));
        }
        let m = self.family.lattice_index(t)? as usize;
        let shift = self.c_estimate * self.family.dt();
        let kernel = self.family.sub_kernel(0);
        let mut cur = self.current.samples().to_vec();
        for _ in 0..m {
            cur = kernel.apply(&cur, false);
            if shift != 0.0 {
                cur.iter_mut().for_each(|v| *v += shift);
            }
        }
        let mut best = cur.clone();
        let mut arg = vec![m; best.len()];
        for j in m + 1..=2 * m {
            cur = kernel.apply(&cur, false);
            if shift != 0.0 {
                cur.iter_mut().for_each(|v| *v += shift);
            }
            for x in 0..best.len() {
                if cur[x] < best[x] {
                    best[x] = cur[x];
                    arg[x] = j;
                }
            }
        }
        Ok((ValueField::new(*self.current.grid(), best, self.current.time_tag())?, arg))
    }

    fn probe(&self, periods: usize) -> Result<CriticalEstimate> {
        let phase = self.phase();
        let u = self.current.samples();
        let base = fmin(u);
        let half = periods / 2;
        let mut cur = u.to_vec();
        let mut half_value = 0.0;
        for k in 1..=periods {
            cur = self.period_map(&cur, phase, 0.0);
            let big = cur.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if big > OVERFLOW_GUARD {
                return Err(Error::Overflow(big));
            }
            if k == half {
                half_value = -(fmin(&cur) - base) / half as f64;
            }
        }
        let value = -(fmin(&cur) - base) / periods as f64;
        Ok(CriticalEstimate { value, half_value, t_probe: periods as f64 })
    }

    /// c ≈ −(min T_t u − min u)/t at t = t_probe, checked against the
    /// half-probe value. Estimates that disagree by more than 10% (with a
    /// 1e-3 absolute floor) are reported as non-Cauchy drift.
    pub fn estimate_critical_value(&self, t_probe: f64) -> Result<CriticalEstimate> {
        if !(t_probe >= 10.0) {
            return Err(Error::Config(format!("t_probe must be at least 10 periods, got {t_probe}")));
        }
        let periods = t_probe.round() as usize;
        let est = self.probe(periods)?;
        let scale = est.value.abs().max(est.half_value.abs());
        if (est.value - est.half_value).abs() > 0.1 * scale + 1e-3 {
            return Err(Error::NonCauchyDrift { full: est.value, half: est.half_value });
        }
        Ok(est)
    }

    /// Iterates the normalized period map until successive iterates differ
    /// by less than `tol` in sup norm; the state ends at the fixed point.
    pub fn fixed_point(&mut self, tol: f64, max_periods: usize) -> Result<ValueField> {
        if !(tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {tol}")));
        }
        let phase = self.phase();
        let c = self.c_estimate;
        let mut cur = self.current.samples().to_vec();
        let mut residuals = Vec::new();
        for k in 1..=max_periods {
            let next = self.period_map(&cur, phase, c);
            let r = next.iter().zip(&cur).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            residuals.push(r);
            self.history.push(HistoryRow { t: self.elapsed() + k as f64, residual: r, c_estimate: c });
            cur = next;
            if r < tol {
                self.step_count += k * self.family.steps_per_period();
                self.current = ValueField::new(*self.current.grid(), cur, self.current.time_tag())?;
                return Ok(self.current.clone());
            }
        }
        Err(Error::NonConvergence { periods: max_periods, last_residual: *residuals.last().unwrap_or(&f64::NAN), residuals })
    }

    /// Sup distance between the current field and one more period map.
    pub fn period_residual(&self) -> Result<f64> {
        let next = self.period_map(self.current.samples(), self.phase(), self.c_estimate);
        let next = ValueField::new(*self.current.grid(), next, self.current.time_tag())?;
        sup_distance(&next, &self.current)
    }

    /// Normalized iterate after `periods` periods, without touching the state.
    pub fn iterate(&self, periods: usize) -> Vec<f64> {
        let phase = self.phase();
        let mut cur = self.current.samples().to_vec();
        for _ in 0..periods {
            cur = self.period_map(&cur, phase, self.c_estimate);
        }
        cur
    }
}

/// Minimizer record of a periodic window evaluation.
#[derive(Debug, Clone)]
pub struct WindowTrace {
    pub values: Vec<f64>,
    /// Window index k₀ achieving the minimum (smallest on ties).
    pub best_k: Vec<usize>,
    traces: Vec<StepTrace>,
    partial: Vec<Vec<usize>>,
    stages: Vec<Arc<ActionKernel>>,
    partial_kernels: Vec<Arc<ActionKernel>>,
    period_shift: f64,
    sub_shift: f64,
    initial: Vec<f64>,
}

impl WindowTrace {
    /// Backtracked node chain ending at `x`: the start node followed by the
    /// node after every stage.
    pub fn chain(&self, x: usize) -> Vec<usize> {
        let mut rev = vec![x];
        let mut cur = x;
        for a in self.partial.iter().rev() {
            cur = a[cur];
            rev.push(cur);
        }
        let k0 = self.best_k[cur];
        for tr in self.traces[..k0].iter().rev() {
            for a in tr.argmins.iter().rev() {
                cur = a[cur];
                rev.push(cur);
            }
        }
        rev.reverse();
        rev
    }

    /// Re-adds the stage costs along the chain in forward order; equals the
    /// operator value bit for bit.
    pub fn reassemble(&self, x: usize) -> f64 {
        let chain = self.chain(x);
        let mut v = self.initial[chain[0]];
        let mut idx = 0;
        let per = self.stages.len();
        let periods = (chain.len() - 1 - self.partial.len()) / per;
        for _ in 0..periods {
            for s in &self.stages {
                v += s.cost(chain[idx], chain[idx + 1]);
                idx += 1;
            }
            if self.period_shift != 0.0 {
                v += self.period_shift;
            }
        }
        for k in &self.partial_kernels {
            v += k.cost(chain[idx], chain[idx + 1]);
            idx += 1;
            if self.sub_shift != 0.0 {
                v += self.sub_shift;
            }
        }
        v
    }
}
