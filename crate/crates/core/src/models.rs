//! Lagrangian catalog: integrable drift, mechanical systems, periodic drift
//! and the quadratic-plus-higher-order family, with Hamiltonians, the
//! Euler-Lagrange flow and closed-form minimal actions where they exist.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{minimal_component, reduce_unit, PeriodicGrid, TorusPoint};

/// Default radius of the velocity ball used by the numerical Legendre transform.
pub const LEGENDRE_RADIUS: f64 = 4.0;

/// Golden-mean rotation number (√5 − 1)/2.
pub fn golden() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// Unit vector along (1, (√5 − 1)/2).
pub fn golden_direction() -> [f64; 2] {
    let g = golden();
    let norm = (1.0 + g * g).sqrt();
    [1.0 / norm, g / norm]
}

/// A 2×2 (or 1×1, stored in the top-left slot) symmetric matrix.
pub type Mat2 = [[f64; 2]; 2];

/// Symmetric positive-definite coefficient field A(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MatrixField {
    Constant(Mat2),
    /// One matrix per node, interpolated multilinearly entry by entry
    /// (convex combinations of SPD matrices stay SPD).
    Sampled { grid: PeriodicGrid, values: Vec<Mat2> },
}

impl MatrixField {
    pub fn identity() -> Self {
        MatrixField::Constant([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn at(&self, x: &[f64]) -> Mat2 {
        match self {
            MatrixField::Constant(m) => *m,
            MatrixField::Sampled { grid, values } => {
                let n = grid.resolution() as f64;
                let mut out = [[0.0; 2]; 2];
                let mut acc = |node: usize, w: f64| {
                    for (r, row) in out.iter_mut().enumerate() {
                        for (c, slot) in row.iter_mut().enumerate() {
                            *slot += w * values[node][r][c];
                        }
                    }
                };
                let s0 = reduce_unit(x[0]) * n;
                let (b0, f0) = (s0.floor(), s0 - s0.floor());
                if grid.dim() == 1 {
                    acc(grid.wrap_index([b0 as i64, 0]), 1.0 - f0);
                    acc(grid.wrap_index([b0 as i64 + 1, 0]), f0);
                } else {
                    let s1 = reduce_unit(x[1]) * n;
                    let (b1, f1) = (s1.floor(), s1 - s1.floor());
                    for (di, wi) in [(0, 1.0 - f0), (1, f0)] {
                        for (dj, wj) in [(0, 1.0 - f1), (1, f1)] {
                            acc(grid.wrap_index([b0 as i64 + di, b1 as i64 + dj]), wi * wj);
                        }
                    }
                }
                out
            }
        }
    }

    fn check(&self, dim: usize) -> Result<()> {
        let mats: Vec<Mat2> = match self {
            MatrixField::Constant(m) => vec![*m],
            MatrixField::Sampled { grid, values } => {
                if grid.dim() != dim || values.len() != grid.node_count() {
                    return Err(Error::Config("matrix field does not match the model dimension".into()));
                }
                values.clone()
            }
        };
        for m in mats {
            let ok = if dim == 1 {
                m[0][0] > 0.0
            } else {
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                (m[0][1] - m[1][0]).abs() <= 1e-12 && m[0][0] > 0.0 && det > 0.0
            };
            if !ok {
                return Err(Error::Config(format!("A(x) must be symmetric positive definite, got {m:?}")));
            }
        }
        Ok(())
    }
}

/// Variant tag and parameters of a catalog Lagrangian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    /// L = ½‖v − ω‖².
    Integrable { omega: Vec<f64> },
    /// L = ½‖v‖² + U(x), U(x) = a·Σᵢ (1 − cos 2πxᵢ).
    Mechanical { amplitude: f64 },
    /// L = ½‖v − ω(t)‖², ω(t) = mean + amplitude·sin 2πt.
    PeriodicDrift { mean: Vec<f64>, amplitude: Vec<f64> },
    /// L = ½⟨A(x)w, w⟩ + quartic·‖w‖⁴ with w = v − ω.
    QuadraticShift { a: MatrixField, omega: Vec<f64>, quartic: f64 },
}

/// A catalog Lagrangian plus a constant energy shift (L + shift).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianModel {
    dim: usize,
    kind: ModelKind,
    energy_shift: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

impl LagrangianModel {
    pub fn new(dim: usize, kind: ModelKind) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Config(format!("model dimension must be 1 or 2, got {dim}")));
        }
        let want = |v: &Vec<f64>, what: &str| -> Result<()> {
            if v.len() != dim || v.iter().any(|c| !c.is_finite()) {
                return Err(Error::Config(format!("{what} must have {dim} finite components")));
            }
            Ok(())
        };
        match &kind {
            ModelKind::Integrable { omega } => want(omega, "omega")?,
            ModelKind::Mechanical { amplitude } => {
                if !(*amplitude >= 0.0 && amplitude.is_finite()) {
                    return Err(Error::Config("potential amplitude must be finite and non-negative".into()));
                }
            }
            ModelKind::PeriodicDrift { mean, amplitude } => {
                want(mean, "drift mean")?;
                want(amplitude, "drift amplitude")?;
            }
            ModelKind::QuadraticShift { a, omega, quartic } => {
                want(omega, "omega")?;
                a.check(dim)?;
                if !(*quartic >= 0.0 && quartic.is_finite()) {
                    return Err(Error::Config("quartic coefficient must be finite and non-negative".into()));
                }
            }
        }
        Ok(Self { dim, kind, energy_shift: 0.0 })
    }

    pub fn integrable(omega: &[f64]) -> Result<Self> {
        Self::new(omega.len(), ModelKind::Integrable { omega: omega.to_vec() })
    }

    /// Pendulum family U(x) = a·Σ(1 − cos 2πxᵢ).
    pub fn mechanical(dim: usize, amplitude: f64) -> Result<Self> {
        Self::new(dim, ModelKind::Mechanical { amplitude })
    }

    pub fn periodic_drift(mean: &[f64], amplitude: &[f64]) -> Result<Self> {
        Self::new(
            mean.len(),
            ModelKind::PeriodicDrift { mean: mean.to_vec(), amplitude: amplitude.to_vec() },
        )
    }

    pub fn quadratic_shift(a: MatrixField, omega: &[f64], quartic: f64) -> Result<Self> {
        Self::new(omega.len(), ModelKind::QuadraticShift { a, omega: omega.to_vec(), quartic })
    }

    /// The same Lagrangian plus a constant.
    pub fn with_energy_shift(mut self, shift: f64) -> Self {
        self.energy_shift = shift;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn energy_shift(&self) -> f64 {
        self.energy_shift
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ModelKind::Integrable { .. } => "integrable",
            ModelKind::Mechanical { .. } => "mechanical",
            ModelKind::PeriodicDrift { .. } => "periodic_drift",
            ModelKind::QuadraticShift { .. } => "quadratic_shift",
        }
    }

    /// True when L does not depend on t.
    pub fn is_autonomous(&self) -> bool {
        match &self.kind {
            ModelKind::PeriodicDrift { amplitude, .. } => amplitude.iter().all(|a| *a == 0.0),
            _ => true,
        }
    }

    /// Drift velocity ω(t) for the drift-type variants.
    pub fn drift(&self, t: f64) -> Option<[f64; 2]> {
        let mut w = [0.0; 2];
        match &self.kind {
            ModelKind::Integrable { omega } | ModelKind::QuadraticShift { omega, .. } => {
                w[..self.dim].copy_from_slice(omega);
            }
            ModelKind::PeriodicDrift { mean, amplitude } => {
                let s = (2.0 * PI * reduce_unit(t)).sin();
                for i in 0..self.dim {
                    w[i] = mean[i] + amplitude[i] * s;
                }
            }
            ModelKind::Mechanical { .. } => return None,
        }
        Some(w)
    }

    /// ∫_{t0}^{t1} ω(s) ds.
    pub fn drift_integral(&self, t0: f64, t1: f64) -> Option<[f64; 2]> {
        let mut w = [0.0; 2];
        match &self.kind {
            ModelKind::Integrable { omega } | ModelKind::QuadraticShift { omega, .. } => {
                for i in 0..self.dim {
                    w[i] = omega[i] * (t1 - t0);
                }
            }
            ModelKind::PeriodicDrift { mean, amplitude } => {
                let c0 = (2.0 * PI * reduce_unit(t0)).cos();
                let c1 = (2.0 * PI * reduce_unit(t1)).cos();
                for i in 0..self.dim {
                    w[i] = mean[i] * (t1 - t0) - amplitude[i] * (c1 - c0) / (2.0 * PI);
                }
            }
            ModelKind::Mechanical { .. } => return None,
        }
        Some(w)
    }

    /// Potential U(x) of the mechanical variant, zero elsewhere.
    pub fn potential(&self, x: &[f64]) -> f64 {
        match self.kind {
            ModelKind::Mechanical { amplitude } => {
                amplitude * x.iter().take(self.dim).map(|c| 1.0 - (2.0 * PI * c).cos()).sum::<f64>()
            }
            _ => 0.0,
        }
    }

    /// L(x, v, t). Slices carry at least `dim` components.
    pub fn lagrangian(&self, x: &[f64], v: &[f64], t: f64) -> f64 {
        let d = self.dim;
        let base = match &self.kind {
            ModelKind::Integrable { omega } => {
                0.5 * (0..d).map(|i| (v[i] - omega[i]).powi(2)).sum::<f64>()
            }
            ModelKind::Mechanical { .. } => 0.5 * norm2(&v[..d]) + self.potential(x),
            ModelKind::PeriodicDrift { .. } => {
                let w = self.drift(t).unwrap();
                0.5 * (0..d).map(|i| (v[i] - w[i]).powi(2)).sum::<f64>()
            }
            ModelKind::QuadraticShift { a, omega, quartic } => {
                let m = a.at(x);
                let mut w = [0.0; 2];
                for i in 0..d {
                    w[i] = v[i] - omega[i];
                }
                let mut quad = 0.0;
                for r in 0..d {
                    for c in 0..d {
                        quad += m[r][c] * w[r] * w[c];
                    }
                }
                let n2 = norm2(&w[..d]);
                0.5 * quad + quartic * n2 * n2
            }
        };
        base + self.energy_shift
    }

    /// H(x, p, t) = sup_v ⟨p, v⟩ − L(x, v, t).
    pub fn hamiltonian(&self, x: &[f64], p: &[f64], t: f64) -> Result<f64> {
        let d = self.dim;
        let kinetic = 0.5 * norm2(&p[..d]);
        let h = match &self.kind {
            ModelKind::Integrable { .. } | ModelKind::PeriodicDrift { .. } => {
                let w = self.drift(t).unwrap();
                dot(&w[..d], &p[..d]) + kinetic
            }
            ModelKind::Mechanical { .. } => kinetic - self.potential(x),
            ModelKind::QuadraticShift { .. } => {
                return self.numerical_hamiltonian(x, p, t, LEGENDRE_RADIUS);
            }
        };
        Ok(h - self.energy_shift)
    }

    /// Legendre transform by coarse grid search over the ball of the given
    /// radius followed by compass-search refinement.
    pub fn numerical_hamiltonian(&self, x: &[f64], p: &[f64], t: f64, radius: f64) -> Result<f64> {
        let d = self.dim;
        let objective = |v: &[f64; 2]| dot(&p[..d], &v[..d]) - self.lagrangian(x, v, t);
        let coarse = 32usize;
        let step0 = 2.0 * radius / coarse as f64;
        let mut best = [0.0; 2];
        let mut best_val = f64::NEG_INFINITY;
        let range: Vec<f64> = (0..=coarse).map(|i| -radius + i as f64 * step0).collect();
        let second: &[f64] = if d == 2 { &range } else { &[0.0] };
        for &a in &range {
            for &b in second {
                let v = [a, b];
                if norm2(&v[..d]) > radius * radius {
                    continue;
                }
                let val = objective(&v);
                if val > best_val {
                    best_val = val;
                    best = v;
                }
            }
        }
        let mut step = step0;
        while step > 1e-10 {
            let mut improved = false;
            for axis in 0..d {
                for sign in [-1.0, 1.0] {
                    let mut v = best;
                    v[axis] += sign * step;
                    let val = objective(&v);
                    if val > best_val {
                        best_val = val;
                        best = v;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if norm2(&best[..d]).sqrt() > radius - step0 {
            return Err(Error::LegendreNonConvergence { radius });
        }
        Ok(best_val)
    }

    /// Acceleration of the Euler-Lagrange flow.
    fn acceleration(&self, x: &[f64; 2], v: &[f64; 2], t: f64) -> [f64; 2] {
        let d = self.dim;
        let mut acc = [0.0; 2];
        match &self.kind {
            ModelKind::Integrable { .. } => {}
            ModelKind::Mechanical { amplitude } => {
                // ẍ = ∂L/∂x = ∇U: the minimum of U is a hyperbolic rest point
                for i in 0..d {
                    acc[i] = amplitude * 2.0 * PI * (2.0 * PI * x[i]).sin();
                }
            }
            ModelKind::PeriodicDrift { amplitude, .. } => {
                let c = (2.0 * PI * reduce_unit(t)).cos();
                for i in 0..d {
                    acc[i] = amplitude[i] * 2.0 * PI * c;
                }
            }
            ModelKind::QuadraticShift { .. } => {
                // M(x,v) v̇ = L_x − L_vx v − L_vt, all by central differences
                let eps = 1e-4;
                let l = |x: &[f64; 2], v: &[f64; 2]| self.lagrangian(x, v, t);
                let lv = |x: &[f64; 2], v: &[f64; 2], i: usize| {
                    let mut a = *v;
                    let mut b = *v;
                    a[i] += eps;
                    b[i] -= eps;
                    (l(x, &a) - l(x, &b)) / (2.0 * eps)
                };
                let mut rhs = [0.0; 2];
                for i in 0..d {
                    let mut xa = *x;
                    let mut xb = *x;
                    xa[i] += eps;
                    xb[i] -= eps;
                    rhs[i] = (l(&xa, v) - l(&xb, v)) / (2.0 * eps);
                    for j in 0..d {
                        let mut xa = *x;
                        let mut xb = *x;
                        xa[j] += eps;
                        xb[j] -= eps;
                        rhs[i] -= (lv(&xa, v, i) - lv(&xb, v, i)) / (2.0 * eps) * v[j];
                    }
                }
                let mut m = [[0.0; 2]; 2];
                for i in 0..d {
                    for j in 0..d {
                        let mut va = *v;
                        let mut vb = *v;
                        va[j] += eps;
                        vb[j] -= eps;
                        m[i][j] = (lv(x, &va, i) - lv(x, &vb, i)) / (2.0 * eps);
                    }
                }
                if d == 1 {
                    acc[0] = rhs[0] / m[0][0];
                } else {
                    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                    acc[0] = (m[1][1] * rhs[0] - m[0][1] * rhs[1]) / det;
                    acc[1] = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;
                }
            }
        }
        acc
    }
}

/// L(x, v, t) for a torus point.
pub fn eval_lagrangian(model: &LagrangianModel, x: &TorusPoint, v: &[f64], t: f64) -> f64 {
    model.lagrangian(x.coords(), v, t)
}

/// H(x, p, t), analytic except for the quadratic-shift variant.
pub fn eval_hamiltonian(model: &LagrangianModel, x: &TorusPoint, p: &[f64], t: f64) -> Result<f64> {
    model.hamiltonian(x.coords(), p, t)
}

/// Closed-form minimal action between `y` at `t0` and `x` at `t1` for the
/// drift variants: min over lifts Δ of ‖Δ − W‖²/(2(t1 − t0)), W = ∫ω.
pub fn analytic_min_action(
    model: &LagrangianModel,
    y: &TorusPoint,
    x: &TorusPoint,
    t0: f64,
    t1: f64,
    lift_radius: usize,
) -> Result<f64> {
    let gap = t1 - t0;
    if !(gap > 0.0) {
        return Err(Error::Config(format!("time interval must be positive, got [{t0}, {t1}]")));
    }
    let w = match model.kind {
        ModelKind::Integrable { .. } | ModelKind::PeriodicDrift { .. } => model.drift_integral(t0, t1).unwrap(),
        ModelKind::Mechanical { .. } => return Err(Error::UnsupportedModel("mechanical")),
        ModelKind::QuadraticShift { .. } => return Err(Error::UnsupportedModel("quadratic_shift")),
    };
    let d = model.dim();
    // per-axis nearest lift, then scan neighbouring shifts
    let mut base = [0.0; 2];
    for i in 0..d {
        base[i] = minimal_component(x.coords()[i] - y.coords()[i] - w[i]);
    }
    let r = lift_radius.max(1) as i64;
    let mut best = f64::INFINITY;
    let second = if d == 2 { r } else { 0 };
    for k0 in -r..=r {
        for k1 in -second..=second {
            let e0 = base[0] + k0 as f64;
            let e1 = if d == 2 { base[1] + k1 as f64 } else { 0.0 };
            best = best.min((e0 * e0 + e1 * e1) / (2.0 * gap));
        }
    }
    Ok(best + model.energy_shift() * gap)
}

/// One sample of a numerical Euler-Lagrange trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: TorusPoint,
    pub v: Vec<f64>,
    pub t: f64,
}

/// RK4 integration of the Euler-Lagrange equations with step doubling; a
/// step whose local error estimate exceeds `tolerance` is rejected.
pub fn euler_lagrange_flow(
    model: &LagrangianModel,
    x0: &TorusPoint,
    v0: &[f64],
    t0: f64,
    duration: f64,
    step: f64,
    tolerance: f64,
) -> Result<Vec<PhasePoint>> {
    if !(step > 0.0) || !(duration >= 0.0) {
        return Err(Error::Config("step must be positive and duration non-negative".into()));
    }
    let d = model.dim();
    let mut x = [0.0; 2];
    let mut v = [0.0; 2];
    x[..d].copy_from_slice(x0.coords());
    v[..d].copy_from_slice(&v0[..d]);
    let mut t = t0;

    let rk4 = |x: [f64; 2], v: [f64; 2], t: f64, h: f64| -> ([f64; 2], [f64; 2]) {
        let add = |a: [f64; 2], b: [f64; 2], s: f64| [a[0] + s * b[0], a[1] + s * b[1]];
        let k1x = v;
        let k1v = model.acceleration(&x, &v, t);
        let k2x = add(v, k1v, h / 2.0);
        let k2v = model.acceleration(&add(x, k1x, h / 2.0), &k2x, t + h / 2.0);
        let k3x = add(v, k2v, h / 2.0);
        let k3v = model.acceleration(&add(x, k2x, h / 2.0), &k3x, t + h / 2.0);
        let k4x = add(v, k3v, h);
        let k4v = model.acceleration(&add(x, k3x, h), &k4x, t + h);
        let mut nx = x;
        let mut nv = v;
        for i in 0..2 {
            nx[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            nv[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
        (nx, nv)
    };

    let snapshot = |x: &[f64; 2], v: &[f64; 2], t: f64| PhasePoint {
        x: TorusPoint::new(&x[..d]),
        v: v[..d].to_vec(),
        t,
    };
    let mut out = vec![snapshot(&x, &v, t)];
    let steps = (duration / step).round() as usize;
    for _ in 0..steps {
        let (fx, fv) = rk4(x, v, t, step);
        let (hx, hv) = rk4(x, v, t, step / 2.0);
        let (hx, hv) = rk4(hx, hv, t + step / 2.0, step / 2.0);
        let mut err: f64 = 0.0;
        for i in 0..d {
            err = err.max((fx[i] - hx[i]).abs()).max((fv[i] - hv[i]).abs());
        }
        let estimate = err / 15.0;
        if estimate > tolerance {
            return Err(Error::StepRejected { time: t, estimate, tolerance });
        }
        x = hx;
        v = hv;
        t += step;
        out.push(snapshot(&x, &v, t));
    }
    Ok(out)
}

/// Finite Diophantine certificate for a frequency vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiophantineSpec {
    pub omega: Vec<f64>,
    pub rho: f64,
    pub alpha: f64,
    pub k_check: u64,
}

impl DiophantineSpec {
    /// Scans 0 < ‖k‖ ≤ k_check and calibrates α as the smallest observed
    /// |⟨ω,k⟩|·‖k‖^ρ. Only two-dimensional unit vectors are accepted.
    pub fn certify(omega: [f64; 2], rho: f64, k_check: u64) -> Result<Self> {
        if (omega[0].hypot(omega[1]) - 1.0).abs() > 1e-12 {
            return Err(Error::Config("frequency must be a unit vector".into()));
        }
        if !(rho > 1.0) {
            return Err(Error::Config(format!("rho must exceed n - 1 = 1, got {rho}")));
        }
        let kc = k_check as i64;
        let mut alpha = f64::INFINITY;
        let mut visit = |k1: i64, k2: i64| {
            if k1 == 0 && k2 == 0 {
                return;
            }
            let kn = ((k1 * k1 + k2 * k2) as f64).sqrt();
            if kn > k_check as f64 {
                return;
            }
            let v = (omega[0] * k1 as f64 + omega[1] * k2 as f64).abs() * kn.powf(rho);
            alpha = alpha.min(v);
        };
        let brute = kc.min(200);
        for k1 in -brute..=brute {
            for k2 in -brute..=brute {
                visit(k1, k2);
            }
        }
        if omega[0].abs() > 1e-12 {
            // beyond the brute-force box only k1 ≈ −ω₂k₂/ω₁ can be small
            for k2 in -kc..=kc {
                let centre = (-omega[1] * k2 as f64 / omega[0]).round() as i64;
                for k1 in centre - 3..=centre + 3 {
                    if k1.abs() > brute || k2.abs() > brute {
                        visit(k1, k2);
                    }
                }
            }
        }
        Ok(Self { omega: omega.to_vec(), rho, alpha, k_check })
    }

    pub fn golden(k_check: u64) -> Result<Self> {
        Self::certify(golden_direction(), 1.0 + 1e-9, k_check)
    }
}
