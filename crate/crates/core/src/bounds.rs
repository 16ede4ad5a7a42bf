//! Hard bounding functions for u around an iterate w_m.
//!
//! With ξ(t, x; 0) the expected discounted time to η^T under P_0,
//!
//! ```text
//! M(t, x)   = λ(t, x) · ( ∫ ξ(t, x + z; 0) ν(dz; x) − ξ(t, x; 0) )
//! N_0       = G_0 − λ w_0 + H
//! N_m       = G_m − G_{m−1}                       (m ≥ 1)
//! ```
//!
//! where ξ is taken as zero off D̄ (a P_0 path started there stops at once),
//! so only landings in D̄ contribute to the integral. With the upper and lower
//! envelopes of the positive and negative parts over `[t, T] × D̄`,
//!
//! ```text
//! w_m + N^L/(1 − M^L) ξ  ≤  u  ≤  w_m + N^U/(1 − M^U) ξ
//! ```
//!
//! provided M^U(0) < 1. The thinned iterates use
//! Ñ_m = G̃_m − G̃_{m−1} with G̃ = G + (λ̃ − λ) w̃.
//!
//! Envelopes come from a finite scan and can only under-estimate the true
//! essential extrema; every [`BoundPair`] records the scan resolution.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::rng::RngStreamSpec;
use crate::harness::stats::{reduce_replications, McEstimate};
use crate::model::{Domain, Problem, ValueField};
use crate::paths::{simulate_path, Law, PathStreams};
use crate::recursion::dejump::EstimatedGrid;
use crate::recursion::estimators::{check_point, evaluate_g_h, McSettings};
use crate::recursion::grid::{GridFunction, GridSpec, OutOfWindow};

/// Which law ξ is taken under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XiLaw {
    /// ξ(·, ·; λ): with jumps.
    Jumps,
    /// ξ(·, ·; 0): under P_0.
    Suppressed,
}

/// Monte Carlo estimate of ξ(t, x) = E[∫_t^{η^T} Θ_{t,s} ds]. Exact (one
/// path) when the chosen law has no randomness.
pub fn estimate_xi(p: &Problem, law: XiLaw, t: f64, x: &[f64], s: &McSettings, rng: &RngStreamSpec) -> Result<McEstimate> {
    if s.n == 0 {
        return Err(Error::arg("replication count N must be positive"));
    }
    if !(s.step > 0.0) {
        return Err(Error::arg("step must be positive"));
    }
    check_point(p, t, x)?;
    if t >= p.horizon {
        return Ok(McEstimate::exact(0.0, s.n, s.level));
    }
    let law = match law {
        XiLaw::Jumps if p.has_jumps() => Law::Intensity,
        _ => Law::Suppressed,
    };
    let n = if law == Law::Suppressed && p.diffusion.is_zero() { 1 } else { s.n };
    let cfg = s.path_config(None);
    let m = reduce_replications(n, |i| {
        let mut streams = PathStreams::new(rng, i);
        let rec = simulate_path(p, law, t, x, &cfg, None, &mut streams)?;
        Ok(rec.integrals.discounted_time)
    })?;
    let mut e = m.estimate(s.level)?;
    if n == 1 {
        e = McEstimate::exact(e.mean, s.n, s.level);
    }
    Ok(e)
}

/// ξ(·, ·; 0) on a grid: the problem's closed form when it has one, else
/// Monte Carlo per node. Nodes off D̄ hold zero.
pub fn xi_grid(p: &Problem, grid: &GridSpec, s: &McSettings, rng: &RngStreamSpec) -> Result<EstimatedGrid> {
    let est: Result<Vec<(f64, f64)>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (t, x) = grid.node(k);
            if !p.domain.in_closure(&x) {
                return Ok((0.0, 0.0));
            }
            if let Some(f) = &p.reference_xi {
                return Ok((f(t, &x), 0.0));
            }
            let e = estimate_xi(p, XiLaw::Suppressed, t, &x, s, &rng.child(k as u64))?;
            Ok((e.mean, e.stderr))
        })
        .collect();
    let est = est?;
    let values = GridFunction::from_values(grid.clone(), est.iter().map(|e| e.0).collect(), OutOfWindow::Clamp)?;
    let stderr = GridFunction::from_values(grid.clone(), est.iter().map(|e| e.1).collect(), OutOfWindow::Clamp)?;
    Ok(EstimatedGrid { values, stderr })
}

/// Envelopes of the positive and negative parts of a field over
/// `[t, T] × D̄`, tabulated at the scan time knots.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremaProfile {
    pub times: Vec<f64>,
    /// sup over `[t, T] × D̄` of the positive part; nonincreasing.
    pub upper: Vec<f64>,
    /// inf over `[t, T] × D̄` of the negative part; nondecreasing.
    pub lower: Vec<f64>,
    pub dt: f64,
    pub dx: f64,
}

impl ExtremaProfile {
    /// Scans `f` over the nodes of `scan` lying in the closure of `domain`.
    /// Returns the profile and the tabulated field (zero off D̄).
    pub fn scan<F>(domain: &Domain, scan: &GridSpec, f: F) -> Result<(Self, GridFunction)>
    where
        F: Fn(f64, &[f64]) -> Result<f64> + Sync,
    {
        let field = GridFunction::try_tabulate(scan.clone(), OutOfWindow::Clamp, |_, t, x| {
            if !domain.in_closure(x) {
                return Ok(0.0);
            }
            let v = f(t, x)?;
            if v.is_nan() {
                return Err(Error::Evaluation(format!("field is NaN at t = {t}, x = {x:?}")));
            }
            Ok(v)
        })?;
        Ok((Self::from_field(&field), field))
    }

    /// Profile of an already tabulated field.
    pub fn from_field(field: &GridFunction) -> Self {
        let spec = field.spec();
        let sl = spec.space_len();
        let nt = spec.time.n;
        let rows: Vec<(f64, f64)> = field
            .values()
            .par_chunks(sl)
            .map(|row| row.iter().fold((0.0f64, 0.0f64), |(hi, lo), &v| (hi.max(v), lo.min(v))))
            .collect();
        let mut upper = vec![0.0; nt];
        let mut lower = vec![0.0; nt];
        let (mut hi, mut lo) = (0.0f64, 0.0f64);
        for i in (0..nt).rev() {
            hi = hi.max(rows[i].0);
            lo = lo.min(rows[i].1);
            upper[i] = hi;
            lower[i] = lo;
        }
        let dx = spec.space.iter().map(|a| a.step()).fold(0.0, f64::max);
        Self { times: spec.time.knots(), upper, lower, dt: spec.time.step(), dx }
    }

    /// A profile that is zero everywhere.
    pub fn zero(times: Vec<f64>) -> Self {
        let n = times.len();
        let dt = if n > 1 { times[1] - times[0] } else { 0.0 };
        Self { times, upper: vec![0.0; n], lower: vec![0.0; n], dt, dx: 0.0 }
    }

    /// Index of the last knot at or before `t` (the first knot for earlier
    /// times), so lookups between knots take the wider set.
    fn index(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t + 1e-12).saturating_sub(1)
    }

    pub fn upper_at(&self, t: f64) -> f64 {
        self.upper[self.index(t)]
    }

    pub fn lower_at(&self, t: f64) -> f64 {
        self.lower[self.index(t)]
    }

    /// Writes `t,upper,lower` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "upper", "lower"])?;
        for i in 0..self.times.len() {
            out.write_record(&[self.times[i].to_string(), self.upper[i].to_string(), self.lower[i].to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// M-envelopes together with the scanned field and the validity flag.
#[derive(Debug, Clone)]
pub struct MExtrema {
    pub profile: ExtremaProfile,
    pub field: GridFunction,
    /// M^U(0) < 1.
    pub valid: bool,
}

/// M(t, x) for a given ξ(·, ·; 0).
pub fn m_value(p: &Problem, xi: &dyn ValueField, t: f64, x: &[f64], tol: f64) -> Result<f64> {
    let lam = p.jump_rate.eval(t, x);
    if lam == 0.0 {
        return Ok(0.0);
    }
    let f_in = |y: &[f64]| xi.value(t, y);
    let (inside, _) = p.jump_measure.restricted_integrals(x, &p.domain, &f_in, &|_| 0.0, tol)?;
    Ok(lam * (inside - xi.value(t, x)))
}

/// Scans M over `scan` and flags whether the bounds apply.
pub fn compute_m_extrema(p: &Problem, xi: &dyn ValueField, scan: &GridSpec, tol: f64) -> Result<MExtrema> {
    check_scan(p, scan)?;
    let (profile, field) = ExtremaProfile::scan(&p.domain, scan, |t, x| m_value(p, xi, t, x, tol))?;
    let valid = profile.upper_at(0.0) < 1.0;
    Ok(MExtrema { profile, field, valid })
}

/// The iterates entering N_m. `rate_bound` switches to the thinned Ñ_m.
#[derive(Clone, Copy)]
pub struct NInputs<'a> {
    pub m: usize,
    pub w_m: &'a dyn ValueField,
    pub w_prev: Option<&'a dyn ValueField>,
    pub rate_bound: Option<f64>,
}

/// N_m(t, x) (or Ñ_m). For m = 0 the thinned and plain forms coincide.
pub fn n_value(p: &Problem, inp: NInputs<'_>, t: f64, x: &[f64], tol: f64) -> Result<f64> {
    let lam = p.jump_rate.eval(t, x);
    if inp.m == 0 {
        let (g, h) = evaluate_g_h(p, inp.w_m, t, x, tol)?;
        return Ok(g - lam * inp.w_m.value(t, x) + h);
    }
    let prev = inp
        .w_prev
        .ok_or_else(|| Error::arg(format!("N_{} needs the iterate w_{}", inp.m, inp.m - 1)))?;
    let diff = |s: f64, y: &[f64]| inp.w_m.value(s, y) - prev.value(s, y);
    let (g, _) = evaluate_g_h(p, &diff, t, x, tol)?;
    let extra = match inp.rate_bound {
        Some(bound) => (bound - lam) * diff(t, x),
        None => 0.0,
    };
    Ok(g + extra)
}

/// Scans N_m (or Ñ_m) over `scan`.
pub fn compute_n_extrema(p: &Problem, inp: NInputs<'_>, scan: &GridSpec, tol: f64) -> Result<(ExtremaProfile, GridFunction)> {
    check_scan(p, scan)?;
    if inp.m > 0 && inp.w_prev.is_none() {
        return Err(Error::arg(format!("N_{} needs the iterate w_{}", inp.m, inp.m - 1)));
    }
    if let Some(b) = inp.rate_bound {
        if !(b >= 0.0) {
            return Err(Error::arg("rate bound must be nonnegative"));
        }
    }
    ExtremaProfile::scan(&p.domain, scan, |t, x| n_value(p, inp, t, x, tol))
}

fn check_scan(p: &Problem, scan: &GridSpec) -> Result<()> {
    if scan.dim() != p.dim {
        return Err(Error::arg("scan grid dimension differs from the problem"));
    }
    let time = &scan.time;
    if time.lo > 0.0 || (time.hi - p.horizon).abs() > 1e-12 {
        return Err(Error::arg(format!("scan must cover [0, {}] in time", p.horizon)));
    }
    Ok(())
}

/// Lower and upper bound for u at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundPair {
    pub t: f64,
    pub x: Vec<f64>,
    pub m: usize,
    pub w_m: f64,
    /// NaN when not valid.
    pub lower: f64,
    /// NaN when not valid.
    pub upper: f64,
    pub valid: bool,
    /// (Δt, Δx) of the scans behind the envelopes.
    pub scan_resolution: (f64, f64),
}

impl BoundPair {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        self.valid && self.lower <= v && v <= self.upper
    }
}

/// Assembles the bracket at `(t, x)` from w_m, ξ(t, x; 0) and the envelopes.
pub fn hard_bounds(m: usize, t: f64, x: &[f64], w_m: f64, xi: f64, mx: &MExtrema, n: &ExtremaProfile) -> BoundPair {
    let res = (mx.profile.dt.max(n.dt), mx.profile.dx.max(n.dx));
    let (lower, upper) = if mx.valid {
        let lo = n.lower_at(t) / (1.0 - mx.profile.lower_at(t));
        let hi = n.upper_at(t) / (1.0 - mx.profile.upper_at(t));
        (w_m + lo * xi, w_m + hi * xi)
    } else {
        (f64::NAN, f64::NAN)
    };
    BoundPair { t, x: x.to_vec(), m, w_m, lower, upper, valid: mx.valid, scan_resolution: res }
}

/// Writes `t,x,m,w_m,lower,upper,valid` rows; bound cells are empty when the
/// bracket does not apply. Multi-dimensional states are space separated.
pub fn write_bounds_csv<W: Write>(w: W, pairs: &[BoundPair]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "x", "m", "w_m", "lower", "upper", "valid"])?;
    for b in pairs {
        let x: Vec<String> = b.x.iter().map(|v| v.to_string()).collect();
        let (lo, hi) = if b.valid { (b.lower.to_string(), b.upper.to_string()) } else { (String::new(), String::new()) };
        out.write_record(&[
            b.t.to_string(),
            x.join(" "),
            b.m.to_string(),
            b.w_m.to_string(),
            lo,
            hi,
            b.valid.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Diffusion, JumpMeasure, ScalarField, VectorField};
    use crate::recursion::deterministic::{deterministic_solve, DEFAULT_TOL};

    fn ruin() -> Problem {
        Problem::new(1, 1.0)
            .with_drift(VectorField::Const(vec![1.0]))
            .with_jumps(ScalarField::Const(1.0), JumpMeasure::dirac(vec![-1.0]))
            .with_domain(Domain::interval(0.0, f64::INFINITY).unwrap())
            .with_exit(|_, _, _| 1.0)
    }

    fn scan() -> GridSpec {
        GridSpec::uniform_1d(0.0, 1.0, 41, 0.0, 6.0, 241).unwrap()
    }

    #[test]
    fn xi_of_ruin_is_remaining_time() {
        let p = ruin();
        let s = McSettings::new(50, 1e-3);
        for (t, x) in [(0.0, 0.0), (0.3, 2.5), (1.0, 1.0)] {
            let e = estimate_xi(&p, XiLaw::Suppressed, t, &[x], &s, &RngStreamSpec::new(1)).unwrap();
            assert!((e.mean - (1.0 - t)).abs() < 1e-12, "{e:?}");
            assert_eq!(e.stderr, 0.0);
        }
        // From 0 the first jump is fatal, so ξ(0, 0; λ) = E[τ ∧ 1] = 1 − e⁻¹.
        let e = estimate_xi(&p, XiLaw::Jumps, 0.0, &[0.0], &McSettings::new(20_000, 1e-3), &RngStreamSpec::new(2)).unwrap();
        assert!(e.z_to(1.0 - (-1.0f64).exp()) < 4.0, "{e:?}");
    }

    #[test]
    fn brownian_xi_matches_exit_time() {
        // E[η ∧ T] for Brownian motion on (−1, 1) from 0 with large T is 1.
        let p = Problem::new(1, 20.0)
            .with_diffusion(Diffusion::scalar(1.0))
            .with_domain(Domain::interval(-1.0, 1.0).unwrap());
        let e = estimate_xi(&p, XiLaw::Suppressed, 0.0, &[0.0], &McSettings::new(20_000, 1e-3), &RngStreamSpec::new(3)).unwrap();
        assert!(e.z_to(1.0) < 4.0, "{e:?}");
    }

    #[test]
    fn ruin_m_envelopes() {
        let p = ruin();
        let xi = |t: f64, _: &[f64]| 1.0 - t;
        let mx = compute_m_extrema(&p, &xi, &scan(), 1e-10).unwrap();
        assert!(mx.valid);
        for (i, &t) in mx.profile.times.iter().enumerate() {
            assert_eq!(mx.profile.upper[i], 0.0);
            assert!((mx.profile.lower[i] + (1.0 - t)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rate_gives_zero_m() {
        let p = ruin().with_jumps(ScalarField::Const(0.0), JumpMeasure::dirac(vec![-1.0]));
        let mx = compute_m_extrema(&p, &|t: f64, _: &[f64]| 1.0 - t, &scan(), 1e-10).unwrap();
        assert!(mx.profile.upper.iter().chain(&mx.profile.lower).all(|&v| v == 0.0));
    }

    #[test]
    fn ruin_n_envelopes_and_bracket() {
        let p = ruin();
        let grid = GridSpec::uniform_1d(0.0, 1.0, 41, 0.0, 8.0, 321).unwrap();
        let w = deterministic_solve(&p, 3, &grid, DEFAULT_TOL).unwrap();
        let xi = |t: f64, _: &[f64]| 1.0 - t;
        let mx = compute_m_extrema(&p, &xi, &scan(), 1e-10).unwrap();
        for m in 1..=3 {
            let inp = NInputs { m, w_m: &w[m], w_prev: Some(&w[m - 1]), rate_bound: None };
            let (np, _) = compute_n_extrema(&p, inp, &scan(), 1e-10).unwrap();
            assert!(np.lower.iter().all(|&v| v > -1e-9), "m={m}");
            for i in 1..np.times.len() {
                assert!(np.upper[i] <= np.upper[i - 1]);
            }
            let b = hard_bounds(m, 0.0, &[0.5], w[m].eval(0.0, &[0.5]), 1.0, &mx, &np);
            assert!(b.valid && b.lower <= b.upper);
            assert!((b.lower - b.w_m).abs() < 1e-9);
            assert!((b.upper - b.w_m - np.upper_at(0.0)).abs() < 1e-12);
        }
        let err = compute_n_extrema(&p, NInputs { m: 2, w_m: &w[2], w_prev: None, rate_bound: None }, &scan(), 1e-10);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn stationary_iterates_give_zero_n() {
        let p = ruin();
        let f = |t: f64, x: &[f64]| (1.0 - t) * (-x[0]).exp();
        let inp = NInputs { m: 4, w_m: &f, w_prev: Some(&f), rate_bound: Some(3.0) };
        let (np, field) = compute_n_extrema(&p, inp, &scan(), 1e-10).unwrap();
        assert!(field.values().iter().all(|&v| v == 0.0));
        let mx = compute_m_extrema(&p, &|t: f64, _: &[f64]| 1.0 - t, &scan(), 1e-10).unwrap();
        let b = hard_bounds(4, 0.2, &[1.0], 0.3, 0.8, &mx, &np);
        assert_eq!((b.lower, b.upper), (0.3, 0.3));
    }

    #[test]
    fn invalid_m_marks_bounds() {
        let p = ruin().with_jumps(ScalarField::Const(1.0), JumpMeasure::dirac(vec![1.0]));
        // Landing in D̄ with a larger ξ drives M positive.
        let xi = |t: f64, x: &[f64]| 4.0 * (1.0 - t) * x[0];
        let mx = compute_m_extrema(&p, &xi, &scan(), 1e-10).unwrap();
        assert!(!mx.valid);
        let b = hard_bounds(1, 0.0, &[1.0], 0.2, 1.0, &mx, &ExtremaProfile::zero(mx.profile.times.clone()));
        assert!(!b.valid && b.lower.is_nan());
        let mut buf = Vec::new();
        write_bounds_csv(&mut buf, &[b]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().nth(1).unwrap(), "0,1,1,0.2,,,false");
    }

    #[test]
    fn profile_lookup_takes_the_wider_set() {
        let spec = GridSpec::uniform_1d(0.0, 1.0, 3, 0.0, 1.0, 2).unwrap();
        let f = GridFunction::from_values(spec, vec![3.0, -1.0, 2.0, -4.0, 1.0, 0.5], OutOfWindow::Clamp).unwrap();
        let pr = ExtremaProfile::from_field(&f);
        assert_eq!(pr.upper, vec![3.0, 2.0, 1.0]);
        assert_eq!(pr.lower, vec![-4.0, -4.0, 0.0]);
        assert_eq!(pr.upper_at(0.7), 2.0);
        assert_eq!(pr.lower_at(1.0), 0.0);
    }
}
