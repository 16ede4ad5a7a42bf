//! Monte Carlo estimators for w_0, w_m, the relay form, v_m and the
//! two-route identities.
//!
//! Every estimator simulates one path per replication, stops it at
//! η^T ∧ τ^(k) for the relevant jump count k and pays
//!
//! * g(X_T) at the horizon,
//! * Ψ(η, X_η, X_η) on a diffusive exit (the value of w_0 on ∂D),
//! * Ψ(η, X_η, X_{η−}) on a jump overshoot,
//! * a carrier value at τ^(k) when the k-th jump lands in D̄,
//!
//! discounted by Θ and net of the running-cost integral. The estimators
//! differ only in the carrier: w_0 for the direct form, the previous iterate
//! for the relay form, zero for v_m.
//!
//! In the relay form the overshoot term is evaluated at η^T rather than η;
//! on the overshoot event the two coincide.

use crate::error::{Error, Result};
use crate::harness::rng::RngStreamSpec;
use crate::harness::stats::{reduce_replications, reduce_sequential, McEstimate, DEFAULT_LEVEL};
use crate::model::{Problem, ValueField};
use crate::paths::{simulate_path, ExitMonitoring, Law, PathConfig, PathRecord, PathStreams, StopReason};
use crate::recursion::grid::{GridFunction, OutOfWindow};

/// Default cap on outer × inner replications for nested w_0.
pub const DEFAULT_NESTED_BUDGET: u128 = 20_000_000_000;

/// Shared Monte Carlo settings.
#[derive(Debug, Clone, PartialEq)]
pub struct McSettings {
    pub n: u64,
    pub step: f64,
    pub level: f64,
    /// Inner replications for nested w_0; `None` means ⌈√N⌉.
    pub n_inner: Option<u64>,
    pub nested_budget: u128,
    pub monitoring: Option<ExitMonitoring>,
}

impl McSettings {
    pub fn new(n: u64, step: f64) -> Self {
        Self {
            n,
            step,
            level: DEFAULT_LEVEL,
            n_inner: None,
            nested_budget: DEFAULT_NESTED_BUDGET,
            monitoring: None,
        }
    }

    pub fn level(mut self, level: f64) -> Self {
        self.level = level;
        self
    }

    pub fn n_inner(mut self, n: Option<u64>) -> Self {
        self.n_inner = n;
        self
    }

    pub fn monitoring(mut self, m: Option<ExitMonitoring>) -> Self {
        self.monitoring = m;
        self
    }

    pub(crate) fn path_config(&self, max_jumps: Option<usize>) -> PathConfig {
        PathConfig::new(self.step).max_jumps(max_jumps).monitoring(self.monitoring)
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::arg("replication count N must be positive"));
        }
        if !(self.step > 0.0) {
            return Err(Error::arg("step must be positive"));
        }
        Ok(())
    }

    fn inner(&self) -> u64 {
        self.n_inner.unwrap_or_else(|| (self.n as f64).sqrt().ceil() as u64).max(1)
    }
}

/// The two identities linking v and w.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoRoute {
    /// v_{m+1} = v_{m−n} + E[1(τ^(m−n) < η^T) Θ v_{n+1}(τ^(m−n), X)].
    VAdvance,
    /// w_m = v_{m−n} + E[1(τ^(m−n) < η^T) Θ w_n(τ^(m−n), X)].
    WFromV,
}

/// Discounted payoff of a stopped path net of running cost, with `carrier`
/// paid when the path stopped on its jump limit.
pub fn settle<C>(p: &Problem, rec: &PathRecord, carrier: C) -> Result<f64>
where
    C: FnOnce(f64, &[f64]) -> Result<f64>,
{
    let s = &rec.stop;
    let pay = match s.reason {
        StopReason::Horizon => (p.terminal_payoff)(&s.post),
        StopReason::BoundaryHit => p.boundary_payoff(s.time, &s.post),
        StopReason::JumpOvershoot => (p.exit_payoff)(s.time, &s.post, &s.pre),
        StopReason::JumpLimit => carrier(s.time, &s.post)?,
    };
    Ok(rec.integrals.theta() * pay - rec.integrals.running_cost)
}

pub(crate) fn check_point(p: &Problem, t: f64, x: &[f64]) -> Result<()> {
    if x.len() != p.dim {
        return Err(Error::arg(format!("point has dimension {}, expected {}", x.len(), p.dim)));
    }
    if !(0.0..=p.horizon).contains(&t) {
        return Err(Error::arg(format!("t = {t} outside [0, {}]", p.horizon)));
    }
    if !p.domain.in_closure(x) {
        return Err(Error::arg(format!("x = {x:?} outside the closed domain")));
    }
    Ok(())
}

/// Runs `n` stopped paths and averages `settle` with the given carrier. The
/// carrier receives the replication index so nested work can derive its own
/// streams.
pub(crate) fn run_stopped<C>(
    p: &Problem,
    law: Law,
    t: f64,
    x: &[f64],
    max_jumps: Option<usize>,
    s: &McSettings,
    rng: &RngStreamSpec,
    carrier: C,
) -> Result<McEstimate>
where
    C: Fn(u64, f64, &[f64]) -> Result<f64> + Sync,
{
    s.check()?;
    check_point(p, t, x)?;
    let cfg = s.path_config(max_jumps);
    let m = reduce_replications(s.n, |i| {
        let mut streams = PathStreams::new(rng, i);
        let rec = simulate_path(p, law, t, x, &cfg, None, &mut streams)?;
        settle(p, &rec, |tau, y| carrier(i, tau, y))
    })?;
    m.estimate(s.level)
}

/// Monte Carlo estimate of w_0 under P_0.
pub fn estimate_w0(p: &Problem, t: f64, x: &[f64], s: &McSettings, rng: &RngStreamSpec) -> Result<McEstimate> {
    s.check()?;
    check_point(p, t, x)?;
    if t >= p.horizon {
        return Ok(McEstimate::exact((p.terminal_payoff)(x), s.n, s.level));
    }
    run_stopped(p, Law::Suppressed, t, x, None, s, rng, |_, _, _| {
        Err(Error::Evaluation("P_0 paths have no jump limit".into()))
    })
}

/// Value of w_0 at a relay point: the closed form when the problem carries
/// one, otherwise a nested P_0 average over `n_inner` paths.
fn w0_at(p: &Problem, n_inner: u64, step: f64, mon: Option<ExitMonitoring>, rng: &RngStreamSpec, t: f64, x: &[f64]) -> Result<f64> {
    if let Some(f) = &p.reference_w0 {
        return Ok(f(t, x));
    }
    if t >= p.horizon {
        return Ok((p.terminal_payoff)(x));
    }
    let cfg = PathConfig::new(step).monitoring(mon);
    let m = reduce_sequential(n_inner, |j| {
        let mut streams = PathStreams::new(rng, j);
        let rec = simulate_path(p, Law::Suppressed, t, x, &cfg, None, &mut streams)?;
        settle(p, &rec, |_, _| Err(Error::Evaluation("P_0 paths have no jump limit".into())))
    })?;
    Ok(m.mean)
}

fn nested_guard(p: &Problem, s: &McSettings) -> Result<u64> {
    let inner = s.inner();
    if p.reference_w0.is_none() {
        let req = s.n as u128 * inner as u128;
        if req > s.nested_budget {
            return Err(Error::Budget { requested: req, cap: s.nested_budget });
        }
    }
    Ok(inner)
}

/// Direct estimate of w_m: paths stopped at η^T ∧ τ^(m), w_0 paid at τ^(m).
pub fn estimate_wm_direct(
    p: &Problem,
    m: usize,
    t: f64,
    x: &[f64],
    s: &McSettings,
    rng: &RngStreamSpec,
) -> Result<McEstimate> {
    if m == 0 {
        return Err(Error::arg("direct estimator needs m ≥ 1; use estimate_w0"));
    }
    estimate_wm_law(p, Law::Intensity, m, t, x, s, rng)
}

pub(crate) fn estimate_wm_law(
    p: &Problem,
    law: Law,
    m: usize,
    t: f64,
    x: &[f64],
    s: &McSettings,
    rng: &RngStreamSpec,
) -> Result<McEstimate> {
    let inner = nested_guard(p, s)?;
    let nested = rng.child(0x5eed);
    run_stopped(p, law, t, x, Some(m), s, rng, |i, tau, y| {
        w0_at(p, inner, s.step, s.monitoring, &nested.child(i), tau, y)
    })
}

/// Estimate of the limit u itself (no jump limit).
pub fn estimate_u(p: &Problem, t: f64, x: &[f64], s: &McSettings, rng: &RngStreamSpec) -> Result<McEstimate> {
    run_stopped(p, Law::Intensity, t, x, None, s, rng, |_, _, _| {
        Err(Error::Evaluation("unbounded paths have no jump limit".into()))
    })
}

/// A grid function as a relay carrier. Queries outside the tabulated window
/// are an error unless the grid carries a constant for them.
pub(crate) fn grid_carrier(g: &GridFunction) -> impl Fn(u64, f64, &[f64]) -> Result<f64> + Sync + '_ {
    move |_, t, y| {
        if g.policy() == OutOfWindow::Clamp && !g.in_window(y) {
            return Err(Error::Evaluation(format!("relay point {y:?} at t={t} is outside the carrier window")));
        }
        Ok(g.eval(t, y))
    }
}

/// Relay estimate of w_m from w_{m−n}: paths stopped at η^T ∧ τ^(n).
pub fn estimate_wm_relay(
    p: &Problem,
    m: usize,
    n: usize,
    prev: &GridFunction,
    t: f64,
    x: &[f64],
    s: &McSettings,
    rng: &RngStreamSpec,
) -> Result<McEstimate> {
    relay_law(p, Law::Intensity, m, n, prev, t, x, s, rng)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn relay_law(
    p: &Problem,
    law: Law,
    m: usize,
    n: usize,
    prev: &GridFunction,
    t: f64,
    x: &[f64],
    s: &McSettings,
    rng: &RngStreamSpec,
) -> Result<McEstimate> {
    if n > m {
        return Err(Error::arg(format!("relay needs n ≤ m, got n={n}, m={m}")));
    }
    s.check()?;
    check_point(p, t, x)?;
    if n == 0 {
        return Ok(McEstimate::exact(grid_carrier(prev)(0, t, x)?, s.n, s.level));
    }
    run_stopped(p, law, t, x, Some(n), s, rng, grid_carrier(prev))
}

/// Estimate of v_m: as w_m but paying nothing at τ^(m).
pub fn estimate_vm(p: &Problem, m: usize, t: f64, x: &[f64], s: &McSettings, rng: &RngStreamSpec) -> Result<McEstimate> {
    vm_law(p, Law::Intensity, m, t, x, s, rng)
}

pub(crate) fn vm_law(p: &Problem, law: Law, m: usize, t: f64, x: &[f64], s: &McSettings, rng: &RngStreamSpec) -> Result<McEstimate> {
    if m == 0 {
        return Err(Error::arg("v_m starts at m = 1"));
    }
    run_stopped(p, law, t, x, Some(m), s, rng, |_, _, _| Ok(0.0))
}

/// Two-route identity on shared paths: the v_{m−n} sample and the carrier
/// term come from the same path stopped at η^T ∧ τ^(m−n).
#[allow(clippy::too_many_arguments)]
pub fn advance_two_routes(
    p: &Problem,
    identity: TwoRoute,
    m: usize,
    n: usize,
    carrier: &GridFunction,
    t: f64,
    x: &[f64],
    s: &McSettings,
    rng: &RngStreamSpec,
) -> Result<McEstimate> {
    two_routes_law(p, Law::Intensity, identity, m, n, carrier, t, x, s, rng)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn two_routes_law(
    p: &Problem,
    law: Law,
    identity: TwoRoute,
    m: usize,
    n: usize,
    carrier: &GridFunction,
    t: f64,
    x: &[f64],
    s: &McSettings,
    rng: &RngStreamSpec,
) -> Result<McEstimate> {
    if m == 0 || n >= m {
        return Err(Error::arg(format!("two-route identity needs 0 ≤ n ≤ m−1, got n={n}, m={m}")));
    }
    // Both identities share the estimator; they differ in what the carrier
    // tabulates (v_{n+1} or w_n) and hence in what the result estimates.
    let _ = identity;
    run_stopped(p, law, t, x, Some(m - n), s, rng, grid_carrier(carrier))
}

/// G_{m−1}(t, x) and H(t, x): the rate-weighted jump integrals of the
/// previous iterate over landings in D̄ and of Ψ over landings outside.
pub fn evaluate_g_h(p: &Problem, w_prev: &dyn ValueField, t: f64, x: &[f64], tol: f64) -> Result<(f64, f64)> {
    let lam = p.jump_rate.eval(t, x);
    if lam == 0.0 {
        return Ok((0.0, 0.0));
    }
    let f_in = |y: &[f64]| w_prev.value(t, y);
    let f_out = |y: &[f64]| (p.exit_payoff)(t, y, x);
    let (a, b) = p.jump_measure.restricted_integrals(x, &p.domain, &f_in, &f_out, tol)?;
    Ok((lam * a, lam * b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Diffusion, Domain, JumpMeasure, ScalarField, VectorField};
    use crate::recursion::grid::GridSpec;

    fn ruin() -> Problem {
        Problem::new(1, 1.0)
            .with_drift(VectorField::Const(vec![1.0]))
            .with_jumps(ScalarField::Const(1.0), JumpMeasure::dirac(vec![-1.0]))
            .with_domain(Domain::interval(0.0, f64::INFINITY).unwrap())
            .with_exit(|_, _, _| 1.0)
    }

    fn w1(t: f64, x: f64) -> f64 {
        let s = (1.0 - x).min(1.0 - t).max(0.0);
        1.0 - (-s).exp()
    }

    #[test]
    fn w0_of_ruin_is_zero() {
        let e = estimate_w0(&ruin(), 0.3, &[0.4], &McSettings::new(1000, 1e-3), &RngStreamSpec::new(1)).unwrap();
        assert_eq!((e.mean, e.stderr), (0.0, 0.0));
    }

    #[test]
    fn w0_at_horizon_is_terminal() {
        let p = ruin().with_terminal(|x| x[0] * 2.0);
        let e = estimate_w0(&p, 1.0, &[0.4], &McSettings::new(10, 1e-3), &RngStreamSpec::new(1)).unwrap();
        assert_eq!((e.mean, e.stderr), (0.8, 0.0));
        let e = estimate_wm_direct(&p.clone().with_reference_w0(|_, x| 2.0 * x[0]), 3, 1.0, &[0.4], &McSettings::new(10, 1e-3), &RngStreamSpec::new(1)).unwrap();
        assert_eq!((e.mean, e.stderr), (0.8, 0.0));
    }

    #[test]
    fn zero_count_is_rejected() {
        assert!(estimate_w0(&ruin(), 0.0, &[0.4], &McSettings::new(0, 1e-3), &RngStreamSpec::new(1)).is_err());
    }

    #[test]
    fn ruin_w1_direct() {
        let e = estimate_wm_direct(&ruin(), 1, 0.0, &[0.0], &McSettings::new(100_000, 1e-3), &RngStreamSpec::new(2)).unwrap();
        assert!(e.z_to(1.0 - (-1.0f64).exp()) < 3.5, "{e:?}");
    }

    #[test]
    fn relay_with_closed_form_w1() {
        let spec = GridSpec::uniform_1d(0.0, 1.0, 201, 0.0, 3.0, 601).unwrap();
        let prev = GridFunction::tabulate(spec, OutOfWindow::Clamp, |t, x| w1(t, x[0]));
        let s = McSettings::new(100_000, 1e-3);
        let e = estimate_wm_relay(&ruin(), 2, 1, &prev, 0.0, &[0.5], &s, &RngStreamSpec::new(3)).unwrap();
        assert!(e.z_to(0.448181) < 3.5, "{e:?}");
        let e0 = estimate_wm_relay(&ruin(), 2, 0, &prev, 0.2, &[0.5], &s, &RngStreamSpec::new(3)).unwrap();
        assert_eq!(e0.mean, prev.eval(0.2, &[0.5]));
        assert_eq!(e0.stderr, 0.0);
    }

    #[test]
    fn relay_outside_window_is_an_error() {
        let spec = GridSpec::uniform_1d(0.0, 1.0, 11, 0.0, 0.6, 7).unwrap();
        let prev = GridFunction::zeros(spec);
        let s = McSettings::new(1000, 1e-3);
        let r = estimate_wm_relay(&ruin(), 2, 1, &prev, 0.0, &[3.5], &s, &RngStreamSpec::new(3));
        assert!(matches!(r, Err(Error::Evaluation(_))));
        let prev = prev.with_policy(OutOfWindow::Constant(0.0));
        assert!(estimate_wm_relay(&ruin(), 2, 1, &prev, 0.0, &[3.5], &s, &RngStreamSpec::new(3)).is_ok());
    }

    #[test]
    fn vm_equals_wm_for_ruin_pathwise() {
        let p = ruin().with_reference_w0(|_, _| 0.0);
        let s = McSettings::new(5000, 1e-3);
        for m in 1..4 {
            let a = estimate_vm(&p, m, 0.0, &[0.7], &s, &RngStreamSpec::new(4)).unwrap();
            let b = estimate_wm_direct(&p, m, 0.0, &[0.7], &s, &RngStreamSpec::new(4)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn zero_rate_direct_matches_w0_in_law() {
        let p = Problem::new(1, 1.0)
            .with_diffusion(Diffusion::scalar(1.0))
            .with_domain(Domain::interval(-1.0, 1.0).unwrap())
            .with_terminal(|_| 1.0)
            .with_jumps(ScalarField::Const(0.0), JumpMeasure::dirac(vec![0.5]));
        let s = McSettings::new(20_000, 1e-2).n_inner(Some(4));
        let a = estimate_w0(&p, 0.0, &[0.0], &s, &RngStreamSpec::new(5)).unwrap();
        let b = estimate_wm_direct(&p, 2, 0.0, &[0.0], &s, &RngStreamSpec::new(5)).unwrap();
        let c = estimate_vm(&p, 2, 0.0, &[0.0], &s, &RngStreamSpec::new(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn nested_budget_is_enforced() {
        let p = Problem::new(1, 1.0).with_diffusion(Diffusion::scalar(1.0)).with_jumps(ScalarField::Const(1.0), JumpMeasure::dirac(vec![0.1]));
        let mut s = McSettings::new(1000, 1e-2);
        s.nested_budget = 10_000;
        let r = estimate_wm_direct(&p, 1, 0.0, &[0.0], &s, &RngStreamSpec::new(1));
        assert!(matches!(r, Err(Error::Budget { requested: 32_000, cap: 10_000 })));
    }

    #[test]
    fn nested_w0_is_close_to_closed_form() {
        // Brownian motion on (−1, 1) paying 1 at T; jumps of +0.3 at rate 1.
        let base = Problem::new(1, 0.5)
            .with_diffusion(Diffusion::scalar(1.0))
            .with_domain(Domain::interval(-1.0, 1.0).unwrap())
            .with_terminal(|_| 1.0)
            .with_jumps(ScalarField::Const(1.0), JumpMeasure::dirac(vec![0.3]));
        let survival = |t: f64, x: &[f64]| {
            let tau = 0.5 - t;
            let mut s = 0.0;
            for k in 0..60 {
                let kf = (2 * k + 1) as f64;
                let w = kf * std::f64::consts::PI / 2.0;
                s += 4.0 / (std::f64::consts::PI * kf) * ((x[0] + 1.0) * w).sin() * (-w * w * tau / 2.0).exp();
            }
            s
        };
        let reference = base.clone().with_reference_w0(survival);
        let s = McSettings::new(4000, 1e-2).n_inner(Some(64));
        let a = estimate_wm_direct(&base, 1, 0.0, &[0.0], &s, &RngStreamSpec::new(6)).unwrap();
        let b = estimate_wm_direct(&reference, 1, 0.0, &[0.0], &s.clone().n_inner(None), &RngStreamSpec::new(7)).unwrap();
        assert!(a.z_distance(&b) < 3.5, "{a:?} {b:?}");
    }

    #[test]
    fn two_routes_v_advance_matches_vm() {
        // Carrier v_1 for the ruin problem equals w_1.
        let spec = GridSpec::uniform_1d(0.0, 1.0, 201, 0.0, 3.0, 601).unwrap();
        let v1 = GridFunction::tabulate(spec, OutOfWindow::Clamp, |t, x| w1(t, x[0]));
        let s = McSettings::new(100_000, 1e-3);
        let p = ruin();
        let a = advance_two_routes(&p, TwoRoute::VAdvance, 1, 0, &v1, 0.0, &[0.5], &s, &RngStreamSpec::new(8)).unwrap();
        let b = estimate_vm(&p, 2, 0.0, &[0.5], &s, &RngStreamSpec::new(9)).unwrap();
        assert!(a.z_distance(&b) < 3.0, "{a:?} {b:?}");
        assert!(advance_two_routes(&p, TwoRoute::VAdvance, 2, 2, &v1, 0.0, &[0.5], &s, &RngStreamSpec::new(8)).is_err());
    }

    #[test]
    fn w_from_v_with_zero_carrier_is_vm() {
        let spec = GridSpec::uniform_1d(0.0, 1.0, 3, 0.0, 10.0, 3).unwrap();
        let zero = GridFunction::zeros(spec);
        let s = McSettings::new(3000, 1e-3);
        let p = ruin();
        let a = advance_two_routes(&p, TwoRoute::WFromV, 3, 0, &zero, 0.0, &[0.5], &s, &RngStreamSpec::new(10)).unwrap();
        let b = estimate_vm(&p, 3, 0.0, &[0.5], &s, &RngStreamSpec::new(10)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn g_h_for_ruin() {
        let p = ruin();
        let zero = |_: f64, _: &[f64]| 0.0;
        assert_eq!(evaluate_g_h(&p, &zero, 0.0, &[0.5], 1e-10).unwrap(), (0.0, 1.0));
        let one = |_: f64, _: &[f64]| 1.0;
        assert_eq!(evaluate_g_h(&p, &one, 0.0, &[1.5], 1e-10).unwrap(), (1.0, 0.0));
        let q = p.clone().with_jumps(ScalarField::func(|t, _| t), JumpMeasure::dirac(vec![-1.0]));
        assert_eq!(evaluate_g_h(&q, &one, 0.0, &[0.5], 1e-10).unwrap(), (0.0, 0.0));
    }
}
