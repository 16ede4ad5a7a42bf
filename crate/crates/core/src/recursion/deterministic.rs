//! Iterates for problems without diffusion.
//!
//! With σ ≡ 0 the path under P_0 is the flow x' = b(s, x), and the de-jumped
//! representation of w_m is a one-dimensional integral along that flow:
//!
//! ```text
//! w_m(t,x) = 1(η>T) Θ Λ g(x(T)) + 1(η≤T) Θ Λ Ψ(η, x(η), x(η))
//!            − ∫_t^{η∧T} Θ Λ (φ − G_{m−1} − H)(s, x(s)) ds
//! ```
//!
//! Writing DJ[c] for the right-hand side with carrier c in place of w_{m−1}
//! and A[c] for the part that is linear in c,
//!
//! * w_m = DJ[w_{m−1}], and w_0 is the same integral with λ ≡ 0;
//! * v_m = DJ[v_{m−1}] with v_0 = 0;
//! * the relay form with n jumps is DJ^n applied to w_{m−n};
//! * the jump-transfer term of the two-route identities after k jumps is A^k.
//!
//! Each application tabulates on the evaluation grid; carriers are read by
//! multilinear interpolation. Constant drift, discount and rate give closed
//! forms for the flow, Θ and Λ. Otherwise the flow is integrated with RK4
//! and interpolated by cubic Hermite polynomials, and the cumulative rates
//! likewise.
//!
//! Integrals are split at carrier time knots and, in one dimension with
//! point-mass jumps, at every time a landing point x(s) + z crosses a carrier
//! space knot or a domain bound, so each piece has a smooth integrand.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::quad::{integrate_1d, GaussLegendre};
use crate::model::{JumpMeasure, Location, Problem};
use crate::paths::rk4;
use crate::recursion::grid::{GridFunction, GridSpec, OutOfWindow};

/// Default absolute quadrature tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
enum Cum {
    /// ∫ rate ds with a constant rate.
    Rate(f64),
    /// Values and derivatives at the table nodes.
    Table { vals: Vec<f64>, rates: Vec<f64> },
}

#[derive(Debug, Clone)]
struct Flow {
    t0: f64,
    x0: Vec<f64>,
    /// Constant drift for the closed-form flow.
    affine: Option<Vec<f64>>,
    /// Table step and nodes (empty in closed form).
    h: f64,
    xs: Vec<f64>,
    dxs: Vec<f64>,
    discount: Cum,
    intensity: Cum,
    /// η when η ≤ T.
    exit: Option<f64>,
    end: f64,
}

impl Flow {
    fn dim(&self) -> usize {
        self.x0.len()
    }

    fn seg(&self, s: f64) -> (usize, f64) {
        let n = self.xs.len() / self.dim() - 1;
        let pos = ((s - self.t0) / self.h).clamp(0.0, n as f64);
        let j = (pos.floor() as usize).min(n.saturating_sub(1));
        (j, pos - j as f64)
    }

    fn state(&self, s: f64, out: &mut [f64]) {
        let d = self.dim();
        if let Some(b) = &self.affine {
            for i in 0..d {
                out[i] = self.x0[i] + b[i] * (s - self.t0);
            }
            return;
        }
        if self.xs.len() == d {
            out.copy_from_slice(&self.x0);
            return;
        }
        let (j, u) = self.seg(s);
        for i in 0..d {
            out[i] = hermite(
                self.xs[j * d + i],
                self.xs[(j + 1) * d + i],
                self.dxs[j * d + i],
                self.dxs[(j + 1) * d + i],
                self.h,
                u,
            );
        }
    }

    fn cum(&self, c: &Cum, s: f64) -> f64 {
        match c {
            Cum::Rate(r) => r * (s - self.t0),
            Cum::Table { vals, rates } => {
                if vals.len() == 1 {
                    return 0.0;
                }
                let (j, u) = self.seg(s);
                hermite(vals[j], vals[j + 1], rates[j], rates[j + 1], self.h, u)
            }
        }
    }
}

#[inline]
fn hermite(y0: f64, y1: f64, d0: f64, d1: f64, h: f64, u: f64) -> f64 {
    let u2 = u * u;
    let u3 = u2 * u;
    (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * h * d0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * h * d1
}

/// Which parts of the flow functional to include.
#[derive(Clone, Copy)]
struct Terms<'c> {
    payoff: bool,
    running_cost: bool,
    overshoot: bool,
    carrier: Option<&'c GridFunction>,
    /// Jumps active: Λ killing and the G/H terms.
    jumps: bool,
}

/// Solver for one problem on one evaluation grid. Flows are computed once
/// and reused by every operator application.
pub struct DeterministicSolver<'a> {
    p: &'a Problem,
    grid: GridSpec,
    tol: f64,
    flows: Vec<Flow>,
}

impl<'a> DeterministicSolver<'a> {
    pub fn new(p: &'a Problem, grid: &GridSpec, tol: f64) -> Result<Self> {
        Self::with_flow_step(p, grid, tol, 1e-3 * p.horizon)
    }

    /// `flow_step` is the RK4 step used when no closed form applies.
    pub fn with_flow_step(p: &'a Problem, grid: &GridSpec, tol: f64, flow_step: f64) -> Result<Self> {
        if !p.diffusion.is_zero() {
            return Err(Error::arg("deterministic solver needs σ ≡ 0"));
        }
        if !(tol > 0.0) || !(flow_step > 0.0) {
            return Err(Error::arg("tolerance and flow step must be positive"));
        }
        if grid.dim() != p.dim {
            return Err(Error::arg("grid dimension differs from the problem"));
        }
        if grid.time.lo < 0.0 || grid.time.hi > p.horizon + 1e-12 {
            return Err(Error::arg("grid times must lie in [0, T]"));
        }
        let gl = GaussLegendre::new(5);
        let flows: Result<Vec<Flow>> = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let (t, x) = grid.node(k);
                if !p.domain.in_closure(&x) {
                    return Err(Error::arg(format!("grid node {x:?} lies outside the closed domain")));
                }
                build_flow(p, t.min(p.horizon), &x, flow_step, &gl)
            })
            .collect();
        Ok(Self { p, grid: grid.clone(), tol, flows: flows? })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn apply(&self, terms: Terms<'_>) -> Result<GridFunction> {
        GridFunction::try_tabulate(self.grid.clone(), OutOfWindow::Clamp, |k, _, _| {
            self.functional(&self.flows[k], terms)
        })
    }

    /// w_0.
    pub fn w0(&self) -> Result<GridFunction> {
        self.apply(Terms { payoff: true, running_cost: true, overshoot: false, carrier: None, jumps: false })
    }

    /// One de-jumped step DJ[c]; `None` stands for c ≡ 0.
    pub fn dejump(&self, prev: Option<&GridFunction>) -> Result<GridFunction> {
        self.apply(Terms { payoff: true, running_cost: true, overshoot: true, carrier: prev, jumps: true })
    }

    /// The transfer term A[c](t,x) = E[1(τ^(1) < η^T) Θ c(τ^(1), X_{τ^(1)})].
    pub fn jump_transfer(&self, carrier: &GridFunction) -> Result<GridFunction> {
        self.apply(Terms { payoff: false, running_cost: false, overshoot: false, carrier: Some(carrier), jumps: true })
    }

    /// w_0, …, w_{m_max}.
    pub fn w_sequence(&self, m_max: usize) -> Result<Vec<GridFunction>> {
        let mut out = vec![self.w0()?];
        for m in 1..=m_max {
            let next = self.dejump(Some(&out[m - 1]))?;
            out.push(next);
        }
        Ok(out)
    }

    /// v_1, …, v_{m_max} (index 0 holds v_0 = 0).
    pub fn v_sequence(&self, m_max: usize) -> Result<Vec<GridFunction>> {
        let mut out = vec![GridFunction::zeros(self.grid.clone())];
        for m in 1..=m_max {
            let next = if m == 1 { self.dejump(None)? } else { self.dejump(Some(&out[m - 1]))? };
            out.push(next);
        }
        Ok(out)
    }

    /// w_m from w_{m−n} through n relay steps.
    pub fn relay(&self, prev: &GridFunction, n: usize) -> Result<GridFunction> {
        let mut cur = prev.clone();
        for _ in 0..n {
            cur = self.dejump(Some(&cur))?;
        }
        Ok(cur)
    }

    /// `v_k + A^k[carrier]`, the right-hand side of both two-route
    /// identities with k = m − n; `v_k` must be supplied.
    pub fn two_routes(&self, v_k: &GridFunction, k: usize, carrier: &GridFunction) -> Result<GridFunction> {
        let mut cur = carrier.clone();
        for _ in 0..k {
            cur = self.jump_transfer(&cur)?;
        }
        v_k.zip_with(&cur, |a, b| a + b)
    }

    fn functional(&self, f: &Flow, terms: Terms<'_>) -> Result<f64> {
        let p = self.p;
        let d = f.dim();
        if f.t0 >= p.horizon {
            return Ok(if terms.payoff { (p.terminal_payoff)(&f.x0) } else { 0.0 });
        }
        let weight = |s: f64| -> f64 {
            let mut w = (-f.cum(&f.discount, s)).exp();
            if terms.jumps {
                w *= (-f.cum(&f.intensity, s)).exp();
            }
            w
        };
        let mut value = 0.0;
        if terms.payoff {
            let mut y = vec![0.0; d];
            match f.exit {
                Some(eta) => {
                    f.state(eta, &mut y);
                    snap(&p.domain, &mut y);
                    value += weight(eta) * p.boundary_payoff(eta, &y);
                }
                None => {
                    f.state(p.horizon, &mut y);
                    value += weight(p.horizon) * (p.terminal_payoff)(&y);
                }
            }
        }
        let lam_zero = p.jump_rate.is_zero();
        let needs_jump_terms = terms.jumps && !lam_zero && (terms.overshoot || terms.carrier.is_some());
        if !terms.running_cost && !needs_jump_terms {
            return Ok(value);
        }
        let pts = self.breakpoints(f, terms);
        let integrand = |s: f64| -> f64 {
            let mut y = [0.0f64; 8];
            let mut yv;
            let y: &mut [f64] = if d <= 8 {
                &mut y[..d]
            } else {
                yv = vec![0.0; d];
                &mut yv
            };
            f.state(s, y);
            let mut v = 0.0;
            if terms.running_cost {
                v -= p.running_cost.eval(s, y);
            }
            if needs_jump_terms {
                v += self.jump_terms(s, y, terms);
            }
            weight(s) * v
        };
        let span = f.end - f.t0;
        for w in pts.windows(2) {
            let len = w[1] - w[0];
            if len <= 0.0 {
                continue;
            }
            value += integrate_1d(integrand, w[0], w[1], self.tol * len / span)?.value;
        }
        Ok(value)
    }

    /// G[c] + H (as selected) at state `y`.
    fn jump_terms(&self, s: f64, y: &[f64], terms: Terms<'_>) -> f64 {
        let p = self.p;
        let lam = p.jump_rate.eval(s, y);
        if lam == 0.0 {
            return 0.0;
        }
        match &p.jump_measure {
            JumpMeasure::PointMass { atoms } => {
                let mut acc = 0.0;
                let mut land = [0.0f64; 8];
                let d = y.len();
                let mut lv;
                let land: &mut [f64] = if d <= 8 {
                    &mut land[..d]
                } else {
                    lv = vec![0.0; d];
                    &mut lv
                };
                for (z, w) in atoms {
                    for i in 0..d {
                        land[i] = y[i] + z[i];
                    }
                    if p.domain.in_closure(land) {
                        if let Some(c) = terms.carrier {
                            acc += w * c.eval(s, land);
                        }
                    } else if terms.overshoot {
                        acc += w * (p.exit_payoff)(s, land, y);
                    }
                }
                lam * acc
            }
            m => {
                let f_in = |z: &[f64]| terms.carrier.map_or(0.0, |c| c.eval(s, z));
                let f_out = |z: &[f64]| if terms.overshoot { (p.exit_payoff)(s, z, y) } else { 0.0 };
                // Quadrature failures surface as NaN and are caught by the
                // outer integrator.
                match m.restricted_integrals(y, &p.domain, &f_in, &f_out, self.tol * 1e-2) {
                    Ok((a, b)) => lam * (a + b),
                    Err(_) => f64::NAN,
                }
            }
        }
    }

    /// Sorted integration breakpoints in [t0, end].
    fn breakpoints(&self, f: &Flow, terms: Terms<'_>) -> Vec<f64> {
        let mut pts = vec![f.t0, f.end];
        let carrier = terms.carrier;
        if let Some(c) = carrier {
            let ta = &c.spec().time;
            for i in 0..ta.n {
                let s = ta.knot(i);
                if s > f.t0 && s < f.end {
                    pts.push(s);
                }
            }
        }
        if f.dim() == 1 && terms.jumps {
            if let JumpMeasure::PointMass { atoms } = &self.p.jump_measure {
                let mut levels: Vec<f64> = Vec::new();
                if let Some((lo, hi)) = self.p.domain.interval_bounds() {
                    levels.extend([lo, hi].into_iter().filter(|v| v.is_finite()));
                }
                let axis = carrier.map(|c| c.spec().space[0]);
                for (z, _) in atoms {
                    self.level_crossings(f, z[0], &levels, axis.as_ref(), &mut pts);
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
        pts
    }

    /// Times in (t0, end) at which x(s) + z meets one of `levels` or a knot
    /// of `axis`.
    fn level_crossings(&self, f: &Flow, z: f64, levels: &[f64], axis: Option<&crate::recursion::grid::Axis>, out: &mut Vec<f64>) {
        let knots_between = |a: f64, b: f64, out: &mut Vec<f64>| {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            for &l in levels {
                if l > lo && l < hi {
                    out.push(l);
                }
            }
            if let Some(ax) = axis {
                if ax.n > 1 {
                    let st = ax.step();
                    let i0 = ((lo - ax.lo) / st).floor().max(0.0) as usize;
                    let i1 = (((hi - ax.lo) / st).ceil().max(0.0) as usize).min(ax.n - 1);
                    for i in i0..=i1 {
                        let k = ax.knot(i);
                        if k > lo && k < hi {
                            out.push(k);
                        }
                    }
                }
            }
        };
        let mut lv = Vec::new();
        if let Some(b) = &f.affine {
            let b = b[0];
            if b == 0.0 {
                return;
            }
            let y0 = f.x0[0] + z;
            let y1 = y0 + b * (f.end - f.t0);
            knots_between(y0, y1, &mut lv);
            for l in lv {
                out.push(f.t0 + (l - y0) / b);
            }
            return;
        }
        let n = f.xs.len();
        for j in 0..n.saturating_sub(1) {
            let s0 = f.t0 + j as f64 * f.h;
            if s0 >= f.end {
                break;
            }
            let (y0, y1) = (f.xs[j] + z, f.xs[j + 1] + z);
            lv.clear();
            knots_between(y0, y1, &mut lv);
            for &l in &lv {
                let u = (l - y0) / (y1 - y0);
                let s = s0 + u * f.h;
                if s > f.t0 && s < f.end {
                    out.push(s);
                }
            }
        }
    }
}

fn snap(domain: &crate::model::Domain, y: &mut [f64]) {
    if let Some((lo, hi)) = domain.interval_bounds() {
        if (y[0] - lo).abs() <= (y[0] - hi).abs() {
            y[0] = lo;
        } else {
            y[0] = hi;
        }
    }
}

fn build_flow(p: &Problem, t: f64, x: &[f64], flow_step: f64, gl: &GaussLegendre) -> Result<Flow> {
    let d = x.len();
    let horizon = p.horizon;
    let affine = if p.drift.is_const() {
        let mut b = vec![0.0; d];
        p.drift.eval(t, x, &mut b);
        Some(b)
    } else {
        None
    };
    let r_const = p.discount_rate.as_const();
    let l_const = p.jump_rate.as_const();
    let mut f = Flow {
        t0: t,
        x0: x.to_vec(),
        affine: affine.clone(),
        h: 0.0,
        xs: x.to_vec(),
        dxs: vec![0.0; d],
        discount: Cum::Rate(r_const.unwrap_or(0.0)),
        intensity: Cum::Rate(l_const.unwrap_or(0.0)),
        exit: None,
        end: horizon,
    };
    if t >= horizon {
        f.end = t;
        return Ok(f);
    }
    let need_table = affine.is_none() || r_const.is_none() || l_const.is_none();
    if need_table {
        let n = ((horizon - t) / flow_step).ceil().max(1.0) as usize;
        let h = (horizon - t) / n as f64;
        f.h = h;
        let mut xs = Vec::with_capacity((n + 1) * d);
        let mut dxs = Vec::with_capacity((n + 1) * d);
        let mut cur = x.to_vec();
        let mut next = vec![0.0; d];
        let mut der = vec![0.0; d];
        let mut k: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; d]);
        for j in 0..=n {
            let s = t + j as f64 * h;
            p.drift.eval(s, &cur, &mut der);
            xs.extend_from_slice(&cur);
            dxs.extend_from_slice(&der);
            if j < n {
                match &affine {
                    Some(b) => {
                        for i in 0..d {
                            next[i] = x[i] + b[i] * (s + h - t);
                        }
                    }
                    None => rk4(&p.drift, s, &cur, h, &mut next, &mut k),
                }
                if next.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Simulation { time: s, message: "flow left the finite range".into() });
                }
                std::mem::swap(&mut cur, &mut next);
            }
        }
        f.xs = xs;
        f.dxs = dxs;
        if r_const.is_none() {
            let c = cum_table(&f, gl, &|s, y| p.discount_rate.eval(s, y));
            f.discount = c;
        }
        if l_const.is_none() {
            let c = cum_table(&f, gl, &|s, y| p.jump_rate.eval(s, y));
            f.intensity = c;
        }
    }
    f.exit = flow_exit(p, &f);
    f.end = f.exit.unwrap_or(horizon);
    Ok(f)
}

/// Cumulative integral of `rate` along a tabulated flow, per segment with a
/// fixed Gauss rule.
fn cum_table(f: &Flow, gl: &GaussLegendre, rate: &dyn Fn(f64, &[f64]) -> f64) -> Cum {
    let d = f.dim();
    let n = f.xs.len() / d - 1;
    let mut vals = vec![0.0; n + 1];
    let mut rates = vec![0.0; n + 1];
    for j in 0..=n {
        let s0 = f.t0 + j as f64 * f.h;
        rates[j] = rate(s0, &f.xs[j * d..(j + 1) * d]);
        if j < n {
            let seg = gl.integrate(
                |s| {
                    let mut y = vec![0.0; d];
                    f.state(s, &mut y);
                    rate(s, &y)
                },
                s0,
                s0 + f.h,
            );
            vals[j + 1] = vals[j] + seg;
        }
    }
    Cum::Table { vals, rates }
}

/// First time in [t0, T] at which the flow leaves D̄.
fn flow_exit(p: &Problem, f: &Flow) -> Option<f64> {
    let d = f.dim();
    let horizon = p.horizon;
    if let (Some(b), Some((lo, hi))) = (&f.affine, p.domain.interval_bounds()) {
        let b = b[0];
        let x = f.x0[0];
        let tol = p.domain.tol();
        let eta = if b > 0.0 && hi.is_finite() {
            if x >= hi - tol {
                f.t0
            } else {
                f.t0 + (hi - x) / b
            }
        } else if b < 0.0 && lo.is_finite() {
            if x <= lo + tol {
                f.t0
            } else {
                f.t0 + (lo - x) / b
            }
        } else {
            return None;
        };
        return if eta <= horizon { Some(eta) } else { None };
    }
    let mut y = vec![0.0; d];
    let outside = |s: f64, y: &mut [f64]| {
        f.state(s, y);
        p.domain.classify(y) == Location::Outside
    };
    let n = if f.h > 0.0 { ((horizon - f.t0) / f.h).round() as usize } else { 1000 };
    let h = (horizon - f.t0) / n as f64;
    let mut prev = f.t0;
    for j in 1..=n {
        let s = f.t0 + j as f64 * h;
        if outside(s, &mut y) {
            let (mut a, mut b) = (prev, s);
            while b - a > 1e-13 * horizon.max(1.0) {
                let m = 0.5 * (a + b);
                if outside(m, &mut y) {
                    b = m;
                } else {
                    a = m;
                }
            }
            // A start on ∂D with outward drift exits at once.
            return Some(if a - f.t0 <= 1e-12 * horizon.max(1.0) { f.t0 } else { a });
        }
        prev = s;
    }
    None
}

/// w_0, …, w_{m_max} on `grid` by repeated de-jumped steps along the flow.
pub fn deterministic_solve(p: &Problem, m_max: usize, grid: &GridSpec, tol: f64) -> Result<Vec<GridFunction>> {
    DeterministicSolver::new(p, grid, tol)?.w_sequence(m_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Domain, JumpMeasure, ScalarField, VectorField};

    fn ruin() -> Problem {
        Problem::new(1, 1.0)
            .with_drift(VectorField::Const(vec![1.0]))
            .with_jumps(ScalarField::Const(1.0), JumpMeasure::dirac(vec![-1.0]))
            .with_domain(Domain::interval(0.0, f64::INFINITY).unwrap())
            .with_exit(|_, _, _| 1.0)
    }

    fn grid() -> GridSpec {
        GridSpec::uniform_1d(0.0, 1.0, 21, 0.0, 4.0, 81).unwrap()
    }

    #[test]
    fn ruin_first_iterates() {
        let fine = GridSpec::uniform_1d(0.0, 1.0, 101, 0.0, 4.0, 401).unwrap();
        let w = deterministic_solve(&ruin(), 2, &fine, 1e-10).unwrap();
        assert!(w[0].values().iter().all(|&v| v == 0.0));
        let e1 = 1.0 - (-1.0f64).exp();
        assert!((w[1].eval(0.0, &[0.0]) - e1).abs() < 1e-6);
        assert!(w[1].eval(0.0, &[2.0]).abs() < 1e-12);
        assert!((w[2].eval(0.0, &[0.5]) - 0.448181).abs() < 1e-5, "{}", w[2].eval(0.0, &[0.5]));
        for w in &w {
            for xi in 0..401 {
                assert_eq!(w.at(100, &[xi]), 0.0);
            }
        }
    }

    #[test]
    fn ruin_iterates_are_monotone() {
        let w = deterministic_solve(&ruin(), 5, &grid(), 1e-9).unwrap();
        for m in 1..w.len() {
            for (a, b) in w[m - 1].values().iter().zip(w[m].values()) {
                assert!(b + 1e-9 >= *a);
            }
        }
    }

    #[test]
    fn relay_and_two_routes_are_consistent() {
        let p = ruin();
        let s = DeterministicSolver::new(&p, &grid(), 1e-9).unwrap();
        let w = s.w_sequence(4).unwrap();
        for m in 0..=4usize {
            for n in 0..=m {
                let r = s.relay(&w[m - n], n).unwrap();
                assert!(r.max_abs_diff(&w[m]).unwrap() < 1e-9, "m={m} n={n}");
            }
        }
        let v = s.v_sequence(5).unwrap();
        for (a, b) in v.iter().zip(&w) {
            assert!(a.max_abs_diff(b).unwrap() < 1e-12);
        }
        // v_5 = v_2 + A^2[v_3]
        let lhs = s.two_routes(&v[2], 2, &v[3]).unwrap();
        assert!(lhs.max_abs_diff(&v[5]).unwrap() < 1e-6);
        // w_4 = v_3 + A^3[w_1]
        let rhs = s.two_routes(&v[3], 3, &w[1]).unwrap();
        assert!(rhs.max_abs_diff(&w[4]).unwrap() < 1e-6);
    }

    #[test]
    fn numeric_flow_matches_closed_form() {
        // Same ruin problem with the drift given as a function and a rate
        // written as a function: forces the RK4/Hermite path.
        let p = ruin()
            .with_drift(VectorField::func(|_, _, o| o[0] = 1.0))
            .with_jumps(ScalarField::func(|_, _| 1.0), JumpMeasure::dirac(vec![-1.0]));
        let a = deterministic_solve(&ruin(), 3, &grid(), 1e-10).unwrap();
        let b = deterministic_solve(&p, 3, &grid(), 1e-10).unwrap();
        for m in 0..=3 {
            assert!(a[m].max_abs_diff(&b[m]).unwrap() < 1e-8, "m={m}");
        }
    }

    #[test]
    fn discounted_flow_exit() {
        // x' = −1 on (0, ∞), r = 0.5, Ψ = 1: w_0(0, x) = e^{−x/2} for x < 1.
        let p = Problem::new(1, 1.0)
            .with_drift(VectorField::func(|_, _, o| o[0] = -1.0))
            .with_discount(ScalarField::func(|_, _| 0.5))
            .with_domain(Domain::interval(0.0, f64::INFINITY).unwrap())
            .with_exit(|_, _, _| 1.0)
            .with_terminal(|x| x[0]);
        let g = GridSpec::uniform_1d(0.0, 1.0, 3, 0.0, 2.0, 5).unwrap();
        let w = deterministic_solve(&p, 0, &g, 1e-10).unwrap();
        assert!((w[0].eval(0.0, &[0.5]) - (-0.25f64).exp()).abs() < 1e-9);
        assert!((w[0].eval(0.0, &[1.5]) - 0.5 * (-0.5f64).exp()).abs() < 1e-9);
        assert_eq!(w[0].eval(0.0, &[0.0]), 1.0);
    }

    #[test]
    fn rejects_diffusion_and_bad_grids() {
        let p = ruin().with_diffusion(crate::model::Diffusion::scalar(1.0));
        assert!(DeterministicSolver::new(&p, &grid(), 1e-8).is_err());
        let g = GridSpec::uniform_1d(0.0, 1.0, 3, -1.0, 1.0, 3).unwrap();
        assert!(DeterministicSolver::new(&ruin(), &g, 1e-8).is_err());
    }
}
