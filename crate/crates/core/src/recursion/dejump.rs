//! The de-jumped step on a grid: w_m from w_{m−1} using only P_0 paths.
//!
//! At each node the sample is
//!
//! ```text
//! Θ K · (g(X_T) or Ψ(η, X_η, X_η)) + ∫ Θ K (J − φ)(s, X_s) ds
//! ```
//!
//! with K = Λ and J = G_{m−1} + H. The thinned variant uses K = e^{−λ̃(s−t)}
//! and adds (λ̃ − λ) w̃_{m−1} to J for the zero-sized jumps.
//!
//! Point-mass jump integrals are evaluated along the path. Other jump laws
//! are tabulated once on the carrier grid and interpolated.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::rng::RngStreamSpec;
use crate::harness::stats::{reduce_sequential, McEstimate};
use crate::model::{JumpKind, Problem};
use crate::paths::{simulate_path, Killing, Law, PathStreams, Source, StopReason};
use crate::recursion::deterministic::{DeterministicSolver, DEFAULT_TOL};
use crate::recursion::estimators::{evaluate_g_h, McSettings};
use crate::recursion::grid::{GridFunction, GridSpec, OutOfWindow};

/// Node values with their Monte Carlo standard errors.
#[derive(Debug, Clone)]
pub struct EstimatedGrid {
    pub values: GridFunction,
    pub stderr: GridFunction,
}

impl EstimatedGrid {
    fn exact(values: GridFunction) -> Self {
        let stderr = GridFunction::zeros(values.spec().clone());
        Self { values, stderr }
    }

    pub fn max_stderr(&self) -> f64 {
        self.stderr.values().iter().fold(0.0, |m, &v| m.max(v))
    }
}

/// G + H as a field: exact for point masses, else tabulated on `spec`.
pub(crate) fn jump_field<'a>(
    p: &'a Problem,
    prev: Option<&'a GridFunction>,
    spec: &GridSpec,
    tol: f64,
) -> Result<Box<dyn Fn(f64, &[f64]) -> f64 + Sync + 'a>> {
    let zero = |_: f64, _: &[f64]| 0.0;
    if p.jump_measure.kind() == JumpKind::PointMass {
        return Ok(Box::new(move |t: f64, x: &[f64]| {
            let r = match prev {
                Some(c) => evaluate_g_h(p, c, t, x, tol),
                None => evaluate_g_h(p, &zero, t, x, tol),
            };
            r.map(|(g, h)| g + h).unwrap_or(f64::NAN)
        }));
    }
    let spec = prev.map_or_else(|| spec.clone(), |c| c.spec().clone());
    let table = GridFunction::try_tabulate(spec, OutOfWindow::Clamp, |_, t, x| {
        if !p.domain.in_closure(x) {
            return Ok(0.0);
        }
        let (g, h) = match prev {
            Some(c) => evaluate_g_h(p, c, t, x, tol)?,
            None => evaluate_g_h(p, &zero, t, x, tol)?,
        };
        Ok(g + h)
    })?;
    Ok(Box::new(move |t: f64, x: &[f64]| table.eval(t, x)))
}

/// Runs the P_0 estimator at every node of `grid`.
pub(crate) fn dejump_general(
    p: &Problem,
    grid: &GridSpec,
    s: &McSettings,
    rng: &RngStreamSpec,
    killing: Killing,
    field: &(dyn Fn(f64, &[f64]) -> f64 + Sync),
) -> Result<EstimatedGrid> {
    if s.n == 0 {
        return Err(Error::arg("replication count N must be positive"));
    }
    if !(s.step > 0.0) {
        return Err(Error::arg("step must be positive"));
    }
    if grid.dim() != p.dim {
        return Err(Error::arg("grid dimension differs from the problem"));
    }
    let source_fn = |t: f64, x: &[f64]| field(t, x) - p.running_cost.eval(t, x);
    let src = Source { field: &source_fn, killing };
    let cfg = s.path_config(None);
    // Paths are deterministic without diffusion; one replication suffices.
    let n = if p.diffusion.is_zero() { 1 } else { s.n };
    let est: Result<Vec<McEstimate>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (t, x) = grid.node(k);
            if !p.domain.in_closure(&x) {
                return Err(Error::arg(format!("grid node {x:?} lies outside the closed domain")));
            }
            if t >= p.horizon {
                return Ok(McEstimate::exact((p.terminal_payoff)(&x), n, s.level));
            }
            let node_rng = rng.child(k as u64);
            let m = reduce_sequential(n, |i| {
                let mut streams = PathStreams::new(&node_rng, i);
                let rec = simulate_path(p, Law::Suppressed, t, &x, &cfg, Some(&src), &mut streams)?;
                let stop = &rec.stop;
                let pay = match stop.reason {
                    StopReason::Horizon => (p.terminal_payoff)(&stop.post),
                    StopReason::BoundaryHit => p.boundary_payoff(stop.time, &stop.post),
                    other => {
                        return Err(Error::Simulation {
                            time: stop.time,
                            message: format!("unexpected stop {other:?} under P_0"),
                        })
                    }
                };
                let kf = killing.factor(stop.time - t, rec.integrals.intensity);
                let v = rec.integrals.theta() * kf * pay + rec.integrals.source;
                if !v.is_finite() {
                    return Err(Error::Evaluation(format!("non-finite de-jump sample at node {k}")));
                }
                Ok(v)
            })?;
            m.estimate(s.level)
        })
        .collect();
    let est = est?;
    let values = GridFunction::from_values(grid.clone(), est.iter().map(|e| e.mean).collect(), OutOfWindow::Clamp)?;
    let stderr = GridFunction::from_values(grid.clone(), est.iter().map(|e| e.stderr).collect(), OutOfWindow::Clamp)?;
    Ok(EstimatedGrid { values, stderr })
}

/// One de-jumped step: w_m on `grid` from `w_prev` = w_{m−1}. `None` stands
/// for a zero carrier (which yields v_1). Without diffusion the step is
/// computed along the deterministic flow.
pub fn dejump_step(
    p: &Problem,
    w_prev: Option<&GridFunction>,
    grid: &GridSpec,
    s: &McSettings,
    rng: &RngStreamSpec,
) -> Result<EstimatedGrid> {
    if p.diffusion.is_zero() {
        let solver = DeterministicSolver::new(p, grid, DEFAULT_TOL)?;
        return Ok(EstimatedGrid::exact(solver.dejump(w_prev)?));
    }
    let field = jump_field(p, w_prev, grid, DEFAULT_TOL * 1e-2)?;
    dejump_general(p, grid, s, rng, Killing::Intensity, &*field)
}

/// w_0 on a grid under P_0 (no killing, no jump terms).
pub fn w0_grid(p: &Problem, grid: &GridSpec, s: &McSettings, rng: &RngStreamSpec) -> Result<EstimatedGrid> {
    if p.diffusion.is_zero() {
        let solver = DeterministicSolver::new(p, grid, DEFAULT_TOL)?;
        return Ok(EstimatedGrid::exact(solver.w0()?));
    }
    let q = p.without_jumps();
    dejump_general(&q, grid, s, rng, Killing::None, &|_, _| 0.0)
}
