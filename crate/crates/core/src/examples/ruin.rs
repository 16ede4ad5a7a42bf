//! Finite-time ruin of a pure-jump risk process.
//!
//! X_s = x + b(s − t) + c N_s with b > 0, c < 0 and N a Poisson process of
//! rate λ; ruin is the first time X < 0, and u(t, x) is its probability
//! before T. Under P_0 the path never leaves [0, ∞), so w_0 ≡ 0, w_m = v_m,
//! and each iterate is a one-dimensional integral of the previous one:
//!
//! ```text
//! w_m(t, x) = ∫_t^T λ e^{−λ(s−t)} [ w_{m−1}(s, y) 1(y ≥ 0) + 1(y < 0) ] ds,
//! y = x + b(s − t) + c.
//! ```
//!
//! The bracket is w_m ≤ u ≤ w_m + λ(T − t) w_m(t, −(m − 1)c).

use rayon::prelude::*;

use crate::bounds::BoundPair;
use crate::error::{Error, Result};
use crate::harness::quad::integrate_pieces;
use crate::model::{Domain, JumpMeasure, Problem, ScalarField, VectorField};
use crate::recursion::grid::{GridFunction, GridSpec, OutOfWindow};

/// Drift, rate, jump size and horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuinParams {
    pub b: f64,
    pub lambda: f64,
    pub c: f64,
    pub horizon: f64,
}

impl Default for RuinParams {
    fn default() -> Self {
        Self { b: 1.0, lambda: 1.0, c: -1.0, horizon: 1.0 }
    }
}

impl RuinParams {
    pub fn new(b: f64, lambda: f64, c: f64, horizon: f64) -> Result<Self> {
        let p = Self { b, lambda, c, horizon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::Config(format!("drift b = {} must be positive", self.b)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("rate λ = {} must be positive", self.lambda)));
        }
        if !(self.c < 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("jump size c = {} must be negative", self.c)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("horizon T = {} must be positive", self.horizon)));
        }
        Ok(())
    }

    /// Time until a single jump no longer ruins: max{0, (−c − x)/b}.
    pub fn theta1(&self, x: f64) -> f64 {
        ((-self.c - x) / self.b).max(0.0)
    }

    /// max{0, min((−2c − x)/b, T − t)}.
    pub fn theta2(&self, t: f64, x: f64) -> f64 {
        ((-2.0 * self.c - x) / self.b).min(self.horizon - t).max(0.0)
    }

    /// The problem in general form, with w_0 ≡ 0 and ξ(t, x; 0) = T − t
    /// attached.
    pub fn problem(&self) -> Problem {
        let horizon = self.horizon;
        Problem::new(1, self.horizon)
            .with_drift(VectorField::Const(vec![self.b]))
            .with_jumps(ScalarField::Const(self.lambda), JumpMeasure::dirac(vec![self.c]))
            .with_domain(Domain::interval(0.0, f64::INFINITY).expect("valid interval"))
            .with_exit(|_, _, _| 1.0)
            .with_rate_bound(Some(self.lambda))
            .with_reference_w0(|_, _| 0.0)
            .with_reference_xi(move |t, _| horizon - t)
    }
}

/// w_m(t, x) in closed form for m ≤ 2.
pub fn ruin_closed_form(p: &RuinParams, m: usize, t: f64, x: f64) -> Result<f64> {
    p.validate()?;
    if !(x >= 0.0) || !(0.0..=p.horizon).contains(&t) {
        return Err(Error::arg(format!("({t}, {x}) is outside [0, T] × [0, ∞)")));
    }
    let w1 = || {
        let s = ((-p.c - x) / p.b).min(p.horizon - t);
        if s >= 0.0 {
            -(-p.lambda * s).exp_m1()
        } else {
            0.0
        }
    };
    match m {
        0 => Ok(0.0),
        1 => Ok(w1()),
        2 => {
            let (a, b) = (p.theta1(x), p.theta2(t, x));
            let inc = if b >= a {
                let l = p.lambda;
                (-l * a).exp() - (-l * b).exp() - l * (-l * b).exp() * (b - a)
            } else {
                0.0
            };
            Ok(w1() + inc)
        }
        _ => Err(Error::Unsupported(format!("no closed form for w_{m}; use ruin_iterate"))),
    }
}

/// Iterates w_0, …, w_{m_max} on a grid, with brackets on demand.
#[derive(Debug, Clone)]
pub struct RuinIterates {
    pub params: RuinParams,
    /// Index m holds w_m; w_0 is zero.
    pub w: Vec<GridFunction>,
}

impl RuinIterates {
    /// Bracket for u at `(t, x)` around w_m.
    pub fn bounds(&self, m: usize, t: f64, x: f64) -> Result<BoundPair> {
        let w = self.w.get(m).ok_or_else(|| Error::arg(format!("w_{m} was not computed")))?;
        let wm = w.eval(t, &[x]);
        let lead = if m == 0 { 0.0 } else { w.eval(t, &[-(m as f64 - 1.0) * self.params.c]) };
        let upper = wm + self.params.lambda * (self.params.horizon - t) * lead;
        Ok(BoundPair {
            t,
            x: vec![x],
            m,
            w_m: wm,
            lower: wm,
            upper,
            valid: true,
            scan_resolution: (0.0, 0.0),
        })
    }
}

/// Recursive quadrature of the iteration formula on `grid` (x ≥ 0). Each
/// integral is split where the landing point crosses a space knot or zero
/// and at the time knots, so every piece is smooth. Landings beyond the
/// window read the edge value; the window should reach m_max·|c|, past
/// which w_m vanishes.
pub fn ruin_iterate(p: &RuinParams, m_max: usize, grid: &GridSpec, tol: f64) -> Result<RuinIterates> {
    p.validate()?;
    if grid.dim() != 1 {
        return Err(Error::arg("ruin grid must be one-dimensional"));
    }
    if grid.space[0].lo < 0.0 {
        return Err(Error::arg("ruin grid must lie in x ≥ 0"));
    }
    if grid.time.lo < 0.0 || grid.time.hi > p.horizon + 1e-12 {
        return Err(Error::arg(format!("ruin grid times must lie in [0, {}]", p.horizon)));
    }
    if !(tol > 0.0) {
        return Err(Error::arg("quadrature tolerance must be positive"));
    }
    let tk = grid.time.knots();
    let xk = grid.space[0].knots();
    let mut w = vec![GridFunction::zeros(grid.clone())];
    for _ in 0..m_max {
        let prev = w.last().expect("nonempty");
        let vals: Result<Vec<f64>> = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let (t, x) = grid.node(k);
                step_at(p, prev, &tk, &xk, t, x[0], tol)
            })
            .collect();
        w.push(GridFunction::from_values(grid.clone(), vals?, OutOfWindow::Clamp)?);
    }
    Ok(RuinIterates { params: *p, w })
}

fn step_at(p: &RuinParams, prev: &GridFunction, tk: &[f64], xk: &[f64], t: f64, x: f64, tol: f64) -> Result<f64> {
    let end = p.horizon;
    if t >= end {
        return Ok(0.0);
    }
    let land = |s: f64| x + p.b * (s - t) + p.c;
    let mut pts = vec![t, end];
    pts.extend(tk.iter().copied().filter(|&s| s > t && s < end));
    for &xj in xk.iter().chain(std::iter::once(&0.0)) {
        let s = t + (xj - x - p.c) / p.b;
        if s > t && s < end {
            pts.push(s);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let f = |s: f64| {
        let y = land(s);
        let v = if y >= 0.0 { prev.eval(s, &[y]) } else { 1.0 };
        p.lambda * (-p.lambda * (s - t)).exp() * v
    };
    Ok(integrate_pieces(f, &pts, tol)?.value)
}
