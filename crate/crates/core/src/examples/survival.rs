//! Survival of a Brownian motion with drift in an interval, with Gaussian
//! jumps at the time-state dependent rate
//!
//! ```text
//! λ(t, x) = 5 t (T − t) (x_U − x)(x − x_L),   λ̃ = (5/16) T² (x_U − x_L)².
//! ```
//!
//! u(t, x) is the probability of staying in D̄ up to T. With a = b/σ²,
//! L = x_U − x_L, S_k(x) = sin(kπ(x − x_L)/L) and decay rates
//! d_k = ½(b²/σ² + (kπσ/L)²), the P_0 quantities are sine series
//!
//! ```text
//! w_0(t, x) = e^{−ax} Σ α_k S_k(x) e^{−d_k (T−t)}
//! ξ(t, x)   = h_0(x) − e^{−ax} Σ c_k S_k(x) e^{−d_k (T−t)}
//! ```
//!
//! and the thinned iterates have coefficients A_{m,k}(t) in the same basis:
//!
//! ```text
//! A_{m,k}(t) = α_k e^{−d_k (T−t)} + C_{m,k}(t),
//! C_{m,k}(t) = ∫_t^T e^{−(d_k+λ̃)(s−t)} (λ̃ C_{m−1,k}(s) + B_{m,k}(s)) ds,
//! B_{m,k}(s) = (2/L) ∫ e^{ay} λ(s, y) (Kw̃_{m−1} − w̃_{m−1})(s, y) S_k(y) dy,
//! ```
//!
//! where K is the Gaussian kernel restricted to landings in D̄. The λ̃ w̃ part
//! of G̃ is diagonal in the sine basis and is carried exactly; only the
//! λ-weighted part goes through quadrature. B is tabulated at uniform time
//! knots and integrated in time exactly for its piecewise-linear interpolant.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::bounds::{hard_bounds, BoundPair, ExtremaProfile, MExtrema};
use crate::error::{Error, Result};
use crate::harness::quad::GaussLegendre;
use crate::model::{Diffusion, Domain, JumpMeasure, Problem, ScalarField, VectorField};
use crate::recursion::grid::{GridFunction, GridSpec, OutOfWindow};

/// Interval, drift, volatility, jump variance, horizon and series length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalParams {
    pub x_l: f64,
    pub x_u: f64,
    pub b: f64,
    pub sigma: f64,
    pub rho: f64,
    pub horizon: f64,
    pub terms: usize,
}

impl Default for SurvivalParams {
    fn default() -> Self {
        Self { x_l: 0.0, x_u: 2.0, b: 2.0, sigma: 1.0, rho: 0.1, horizon: 1.0, terms: 500 }
    }
}

impl SurvivalParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_l, self.x_u, self.b, self.sigma, self.rho, self.horizon].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("survival parameters must be finite".into()));
        }
        if !(self.x_l < self.x_u) {
            return Err(Error::Config(format!("empty interval ({}, {})", self.x_l, self.x_u)));
        }
        if !(self.sigma > 0.0 && self.rho > 0.0 && self.horizon > 0.0) {
            return Err(Error::Config("σ, ρ and T must be positive".into()));
        }
        if self.terms == 0 {
            return Err(Error::Config("series truncation K must be positive".into()));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.x_u - self.x_l
    }

    /// a = b/σ².
    pub fn a(&self) -> f64 {
        self.b / (self.sigma * self.sigma)
    }

    pub fn rate(&self, t: f64, x: f64) -> f64 {
        5.0 * t * (self.horizon - t) * (self.x_u - x) * (x - self.x_l)
    }

    /// sup λ over [0, T] × D̄.
    pub fn rate_bound(&self) -> f64 {
        5.0 / 16.0 * self.horizon.powi(2) * self.length().powi(2)
    }

    /// d_k.
    pub fn decay(&self, k: usize) -> f64 {
        let w = k as f64 * PI * self.sigma / self.length();
        0.5 * (self.b * self.b / (self.sigma * self.sigma) + w * w)
    }

    /// Sine coefficient of e^{ax} on (x_L, x_U).
    pub fn alpha(&self, k: usize) -> f64 {
        let (l, s2) = (self.length(), self.sigma * self.sigma);
        let kf = k as f64;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let a = self.a();
        2.0 * kf * PI * s2 * s2 / (self.b * self.b * l * l + kf * kf * PI * PI * s2 * s2)
            * ((a * self.x_l).exp() - sign * (a * self.x_u).exp())
    }

    /// E_0[η] from x with no horizon.
    pub fn h0(&self, x: f64) -> f64 {
        let (xl, xu, s2) = (self.x_l, self.x_u, self.sigma * self.sigma);
        if self.b.abs() < 1e-12 {
            return (x - xl) * (xu - x) / s2;
        }
        let el = (-2.0 * self.b * (xl - x) / s2).exp();
        let eu = (-2.0 * self.b * (xu - x) / s2).exp();
        ((xu - x) * (el - 1.0) + (xl - x) * (1.0 - eu)) / (self.b * (el - eu))
    }
}

/// Composite Gauss–Legendre nodes on the interval and the sine table.
#[derive(Debug, Clone)]
struct Basis {
    y: Vec<f64>,
    wy: Vec<f64>,
    /// S_k(y_j) for k = 1..=K, row k−1.
    sin: Vec<f64>,
}

impl Basis {
    fn new(p: &SurvivalParams) -> Self {
        // One 8-point panel per period of the highest mode.
        let panels = p.terms.div_ceil(2).max(32);
        let (y, wy) = GaussLegendre::new(8).composite(p.x_l, p.x_u, panels);
        let n = y.len();
        let mut sin = vec![0.0; p.terms * n];
        for (j, &yj) in y.iter().enumerate() {
            let th = PI * (yj - p.x_l) / p.length();
            for (k, v) in sine_ladder(th, p.terms).into_iter().enumerate() {
                sin[k * n + j] = v;
            }
        }
        Self { y, wy, sin }
    }

    fn n(&self) -> usize {
        self.y.len()
    }
}

/// sin(kθ) for k = 1..=n by the three-term recurrence.
fn sine_ladder(th: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let c2 = 2.0 * th.cos();
    let (mut prev, mut cur) = (0.0, th.sin());
    for _ in 0..n {
        out.push(cur);
        let next = c2 * cur - prev;
        prev = cur;
        cur = next;
    }
    out
}

/// e^{−ax} Σ coef_k S_k(x).
fn synth(p: &SurvivalParams, coef: &[f64], x: f64) -> f64 {
    if x <= p.x_l || x >= p.x_u {
        return 0.0;
    }
    let th = PI * (x - p.x_l) / p.length();
    let c2 = 2.0 * th.cos();
    let (mut prev, mut cur) = (0.0, th.sin());
    let mut acc = 0.0;
    for &c in coef {
        acc += c * cur;
        let next = c2 * cur - prev;
        prev = cur;
        cur = next;
    }
    (-p.a() * x).exp() * acc
}

/// Closed-form series for w_0 and ξ(·, ·; 0).
#[derive(Debug, Clone)]
pub struct SurvivalSeries {
    pub params: SurvivalParams,
    alpha: Vec<f64>,
    c: Vec<f64>,
    decay: Vec<f64>,
}

impl SurvivalSeries {
    pub fn new(params: SurvivalParams) -> Result<Self> {
        params.validate()?;
        let basis = Basis::new(&params);
        Ok(Self::with_basis(params, &basis))
    }

    fn with_basis(params: SurvivalParams, basis: &Basis) -> Self {
        let k_max = params.terms;
        let alpha = (1..=k_max).map(|k| params.alpha(k)).collect();
        let decay = (1..=k_max).map(|k| params.decay(k)).collect();
        let a = params.a();
        let n = basis.n();
        let f: Vec<f64> = basis.y.iter().zip(&basis.wy).map(|(&y, &w)| w * params.h0(y) * (a * y).exp()).collect();
        let scale = 2.0 / params.length();
        let c = (0..k_max)
            .map(|k| scale * basis.sin[k * n..(k + 1) * n].iter().zip(&f).map(|(s, v)| s * v).sum::<f64>())
            .collect();
        Self { params, alpha, c, decay }
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    fn w0_coefficients(&self, t: f64) -> Vec<f64> {
        let tau = self.params.horizon - t;
        self.alpha.iter().zip(&self.decay).map(|(a, d)| a * (-d * tau).exp()).collect()
    }

    /// w_0(t, x) = P_0(η > T). Exactly 1 at t = T inside D̄.
    pub fn w0(&self, t: f64, x: f64) -> f64 {
        if t >= self.params.horizon {
            return if (self.params.x_l..=self.params.x_u).contains(&x) { 1.0 } else { 0.0 };
        }
        synth(&self.params, &self.w0_coefficients(t), x)
    }

    /// ξ(t, x; 0) = E_0[η ∧ T] − t.
    pub fn xi(&self, t: f64, x: f64) -> f64 {
        let p = &self.params;
        if t >= p.horizon || x <= p.x_l || x >= p.x_u {
            return 0.0;
        }
        let tau = p.horizon - t;
        let coef: Vec<f64> = self.c.iter().zip(&self.decay).map(|(c, d)| c * (-d * tau).exp()).collect();
        p.h0(x) - synth(p, &coef, x)
    }

    /// The problem in general form with the series attached as w_0 and ξ.
    pub fn problem(&self) -> Problem {
        let p = self.params;
        let me = Arc::new(self.clone());
        let (w0, xi) = (Arc::clone(&me), me);
        Problem::new(1, p.horizon)
            .with_drift(VectorField::Const(vec![p.b]))
            .with_diffusion(Diffusion::scalar(p.sigma))
            .with_jumps(
                ScalarField::func(move |t, x| p.rate(t, x[0]).max(0.0)),
                JumpMeasure::Gaussian { variance: p.rho },
            )
            .with_domain(Domain::interval(p.x_l, p.x_u).expect("validated interval"))
            .with_terminal(|_| 1.0)
            .with_exit(|_, _, _| 0.0)
            .with_rate_bound(Some(p.rate_bound()))
            .with_reference_w0(move |t, x| w0.w0(t, x[0]))
            .with_reference_xi(move |t, x| xi.xi(t, x[0]))
    }
}

/// Time step of the knots at which B is tabulated.
pub const DEFAULT_SERIES_STEP: f64 = 0.005;

/// Thinned iterates w̃_0, …, w̃_{m_max} as sine series.
#[derive(Debug, Clone)]
pub struct SurvivalSolver {
    pub series: SurvivalSeries,
    basis: Basis,
    /// Restricted Gaussian kernel on the nodes, row j: weights for K·(y_j).
    kernel: Vec<f64>,
    knots: Vec<f64>,
    /// λ̃, at least sup λ.
    bound: f64,
    /// c[m][i]: C_{m,·}(s_i).
    c: Vec<Vec<Vec<f64>>>,
    /// beta[m][i]: λ̃ C_{m−1,·}(s_i) + B_{m,·}(s_i); empty for m = 0.
    beta: Vec<Vec<Vec<f64>>>,
}

/// ∫_0^h e^{−μu} (f0 + (f1 − f0) u/h) du.
fn lin_exp(mu: f64, h: f64, f0: f64, f1: f64) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    let z = mu * h;
    let (i0, i1) = if z < 1e-3 {
        (h * (1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0), h * h * (0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0))
    } else {
        let e = (-z).exp();
        let om = -(-z).exp_m1();
        (om / mu, (om - z * e) / (mu * mu))
    };
    f0 * i0 + (f1 - f0) / h * i1
}

impl SurvivalSolver {
    /// Builds the iterates up to `m_max` with knots `step` apart.
    pub fn new(params: SurvivalParams, m_max: usize, step: f64) -> Result<Self> {
        Self::with_rate_bound(params, params.rate_bound(), m_max, step)
    }

    /// As [`SurvivalSolver::new`] with a dominating rate λ̃ ≥ sup λ.
    pub fn with_rate_bound(params: SurvivalParams, bound: f64, m_max: usize, step: f64) -> Result<Self> {
        params.validate()?;
        if !(bound.is_finite() && bound >= params.rate_bound()) {
            return Err(Error::Config(format!("λ̃ = {bound} is below sup λ = {}", params.rate_bound())));
        }
        if !(step > 0.0) || step > params.horizon {
            return Err(Error::arg(format!("series time step {step} must lie in (0, T]")));
        }
        let basis = Basis::new(&params);
        let series = SurvivalSeries::with_basis(params, &basis);
        let n = basis.n();
        let norm = 1.0 / (2.0 * PI * params.rho).sqrt();
        let mut kernel = vec![0.0; n * n];
        kernel.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            let yj = basis.y[j];
            for (l, r) in row.iter_mut().enumerate() {
                let d = basis.y[l] - yj;
                *r = basis.wy[l] * norm * (-d * d / (2.0 * params.rho)).exp();
            }
        });
        let nt = (params.horizon / step).round().max(1.0) as usize;
        let knots: Vec<f64> = (0..=nt).map(|i| params.horizon * i as f64 / nt as f64).collect();
        let k_max = params.terms;
        let mut me = Self {
            series,
            basis,
            kernel,
            knots,
            bound,
            c: vec![vec![vec![0.0; k_max]; nt + 1]],
            beta: vec![Vec::new()],
        };
        for m in 1..=m_max {
            me.push_level(m)?;
        }
        Ok(me)
    }

    pub fn m_max(&self) -> usize {
        self.c.len() - 1
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn rate_bound(&self) -> f64 {
        self.bound
    }

    fn params(&self) -> &SurvivalParams {
        &self.series.params
    }

    /// Values e^{−ay_j} Σ coef_k S_k(y_j) at the quadrature nodes.
    fn nodal(&self, coef: &[f64]) -> Vec<f64> {
        let n = self.basis.n();
        let mut v = vec![0.0; n];
        for (k, &ck) in coef.iter().enumerate() {
            if ck == 0.0 {
                continue;
            }
            let row = &self.basis.sin[k * n..(k + 1) * n];
            for (o, s) in v.iter_mut().zip(row) {
                *o += ck * s;
            }
        }
        let a = self.params().a();
        for (o, &y) in v.iter_mut().zip(&self.basis.y) {
            *o *= (-a * y).exp();
        }
        v
    }

    /// ∫_{x+z ∈ D̄} f(x + z) ν(dz) from nodal values of f.
    fn convolve_at(&self, nodal: &[f64], x: f64) -> f64 {
        let p = self.params();
        let norm = 1.0 / (2.0 * PI * p.rho).sqrt();
        self.basis
            .y
            .iter()
            .zip(&self.basis.wy)
            .zip(nodal)
            .map(|((&y, &w), &f)| {
                let d = y - x;
                w * norm * (-d * d / (2.0 * p.rho)).exp() * f
            })
            .sum()
    }

    fn push_level(&mut self, m: usize) -> Result<()> {
        let p = *self.params();
        let k_max = p.terms;
        let n = self.basis.n();
        let a = p.a();
        let bound = self.bound;
        let prev = &self.c[m - 1];
        let scale = 2.0 / p.length();
        let beta: Vec<Vec<f64>> = self
            .knots
            .par_iter()
            .enumerate()
            .map(|(i, &s)| {
                let mut b: Vec<f64> = prev[i].iter().map(|c| bound * c).collect();
                let lam: Vec<f64> = self.basis.y.iter().map(|&y| p.rate(s, y)).collect();
                if lam.iter().all(|&l| l == 0.0) {
                    return b;
                }
                let w0 = self.series.w0_coefficients(s);
                let coef: Vec<f64> = w0.iter().zip(&prev[i]).map(|(u, v)| u + v).collect();
                let w = self.nodal(&coef);
                let f: Vec<f64> = (0..n)
                    .map(|j| {
                        let kw: f64 = self.kernel[j * n..(j + 1) * n].iter().zip(&w).map(|(k, v)| k * v).sum();
                        self.basis.wy[j] * (a * self.basis.y[j]).exp() * lam[j] * (kw - w[j])
                    })
                    .collect();
                for (k, bk) in b.iter_mut().enumerate() {
                    let row = &self.basis.sin[k * n..(k + 1) * n];
                    *bk += scale * row.iter().zip(&f).map(|(s, v)| s * v).sum::<f64>();
                }
                b
            })
            .collect();
        let nt = self.knots.len() - 1;
        let mut c = vec![vec![0.0; k_max]; nt + 1];
        for i in (0..nt).rev() {
            let h = self.knots[i + 1] - self.knots[i];
            for k in 0..k_max {
                let mu = self.series.decay[k] + bound;
                c[i][k] = (-mu * h).exp() * c[i + 1][k] + lin_exp(mu, h, beta[i][k], beta[i + 1][k]);
            }
        }
        if c.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Quadrature { estimate: f64::NAN, achieved: f64::NAN, requested: 0.0 });
        }
        self.c.push(c);
        self.beta.push(beta);
        Ok(())
    }

    /// C_{m,·}(t) between knots.
    fn c_at(&self, m: usize, t: f64) -> Vec<f64> {
        let k_max = self.params().terms;
        if m == 0 {
            return vec![0.0; k_max];
        }
        let nt = self.knots.len() - 1;
        let pos = t / self.params().horizon * nt as f64;
        let i = (pos.floor().max(0.0) as usize).min(nt);
        if (pos - i as f64).abs() < 1e-12 || i == nt {
            return self.c[m][i].clone();
        }
        let (s0, s1) = (self.knots[i], self.knots[i + 1]);
        let f = (t - s0) / (s1 - s0);
        let h = s1 - t;
        let bound = self.bound;
        (0..k_max)
            .map(|k| {
                let mu = self.series.decay[k] + bound;
                let bt = self.beta[m][i][k] * (1.0 - f) + self.beta[m][i + 1][k] * f;
                (-mu * h).exp() * self.c[m][i + 1][k] + lin_exp(mu, h, bt, self.beta[m][i + 1][k])
            })
            .collect()
    }

    /// Sine coefficients A_{m,·}(t) of w̃_m(t, ·).
    pub fn coefficients(&self, m: usize, t: f64) -> Result<Vec<f64>> {
        if m > self.m_max() {
            return Err(Error::arg(format!("w̃_{m} was not computed (m_max = {})", self.m_max())));
        }
        if !(0.0..=self.params().horizon).contains(&t) {
            return Err(Error::arg(format!("t = {t} outside [0, T]")));
        }
        let w0 = self.series.w0_coefficients(t);
        Ok(w0.iter().zip(self.c_at(m, t)).map(|(u, v)| u + v).collect())
    }

    /// w̃_m(t, x).
    pub fn w_tilde(&self, m: usize, t: f64, x: f64) -> Result<f64> {
        if t >= self.params().horizon {
            return Ok(self.series.w0(t, x));
        }
        Ok(synth(self.params(), &self.coefficients(m, t)?, x))
    }

    /// w̃_m tabulated on `grid` (nodes outside D̄ hold zero).
    pub fn w_tilde_grid(&self, m: usize, grid: &GridSpec) -> Result<GridFunction> {
        self.tabulate_rows(grid, |t, xs| {
            let coef = self.coefficients(m, t)?;
            Ok(xs.iter().map(|&x| if t >= self.params().horizon { self.series.w0(t, x) } else { synth(self.params(), &coef, x) }).collect())
        })
    }

    fn tabulate_rows<F>(&self, grid: &GridSpec, row: F) -> Result<GridFunction>
    where
        F: Fn(f64, &[f64]) -> Result<Vec<f64>> + Sync,
    {
        if grid.dim() != 1 {
            return Err(Error::arg("survival grids are one-dimensional"));
        }
        let xs = grid.space[0].knots();
        let rows: Result<Vec<Vec<f64>>> = grid.time.knots().into_par_iter().map(|t| row(t, &xs)).collect();
        let vals = rows?.into_iter().flatten().collect();
        GridFunction::from_values(grid.clone(), vals, OutOfWindow::Clamp)
    }

    /// Ñ_m on `grid`: G̃_m − G̃_{m−1} for m ≥ 1 and G_0 − λ w_0 for m = 0
    /// (H vanishes since Ψ ≡ 0).
    pub fn n_field(&self, m: usize, grid: &GridSpec) -> Result<GridFunction> {
        let p = *self.params();
        let bound = self.bound;
        self.tabulate_rows(grid, |t, xs| {
            let diff: Vec<f64> = if m == 0 {
                self.coefficients(0, t)?
            } else {
                let hi = self.coefficients(m, t)?;
                let lo = self.coefficients(m - 1, t)?;
                hi.iter().zip(&lo).map(|(a, b)| a - b).collect()
            };
            let nodal = self.nodal(&diff);
            Ok(xs
                .iter()
                .map(|&x| {
                    if x < p.x_l || x > p.x_u {
                        return 0.0;
                    }
                    let lam = p.rate(t, x);
                    let d = synth(&p, &diff, x);
                    let conv = if lam == 0.0 { 0.0 } else { self.convolve_at(&nodal, x) };
                    let own = if m == 0 { -lam * d } else { (bound - lam) * d };
                    own + lam * conv
                })
                .collect())
        })
    }

    /// M = λ (Kξ − ξ) on `grid`.
    pub fn m_field(&self, grid: &GridSpec) -> Result<GridFunction> {
        let p = *self.params();
        self.tabulate_rows(grid, |t, xs| {
            let xi: Vec<f64> = self.basis.y.iter().map(|&y| self.series.xi(t, y)).collect();
            Ok(xs
                .iter()
                .map(|&x| {
                    let lam = p.rate(t, x);
                    if lam <= 0.0 {
                        return 0.0;
                    }
                    lam * (self.convolve_at(&xi, x) - self.series.xi(t, x))
                })
                .collect())
        })
    }

    /// M-envelopes from a scan of the series.
    pub fn m_extrema(&self, scan: &GridSpec) -> Result<MExtrema> {
        let field = self.m_field(scan)?;
        let profile = ExtremaProfile::from_field(&field);
        let valid = profile.upper_at(0.0) < 1.0;
        Ok(MExtrema { profile, field, valid })
    }

    /// Brackets for u around w̃_m at `points`, with N-envelopes scanned on
    /// `scan` and M-envelopes from [`SurvivalSolver::m_extrema`].
    pub fn bounds(&self, m: usize, mx: &MExtrema, scan: &GridSpec, points: &[(f64, f64)]) -> Result<Vec<BoundPair>> {
        let np = ExtremaProfile::from_field(&self.n_field(m, scan)?);
        points
            .iter()
            .map(|&(t, x)| {
                let w = self.w_tilde(m, t, x)?;
                Ok(hard_bounds(m, t, &[x], w, self.series.xi(t, x), mx, &np))
            })
            .collect()
    }
}

/// Which series quantity to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurvivalQuantity {
    W0,
    Xi,
    /// w̃_m.
    Wm(usize),
}

/// One-off evaluation of a series quantity. Builds the iterates when needed;
/// reuse a [`SurvivalSolver`] for many points.
pub fn survival_series(params: SurvivalParams, q: SurvivalQuantity, t: f64, x: f64) -> Result<f64> {
    params.validate()?;
    if !(params.x_l..=params.x_u).contains(&x) || !(0.0..=params.horizon).contains(&t) {
        return Err(Error::arg(format!("({t}, {x}) outside [0, T] × D̄")));
    }
    match q {
        SurvivalQuantity::W0 => Ok(SurvivalSeries::new(params)?.w0(t, x)),
        SurvivalQuantity::Xi => Ok(SurvivalSeries::new(params)?.xi(t, x)),
        SurvivalQuantity::Wm(m) => SurvivalSolver::new(params, m, DEFAULT_SERIES_STEP)?.w_tilde(m, t, x),
    }
}
