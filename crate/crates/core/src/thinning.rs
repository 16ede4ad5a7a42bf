//! Thinned iterates.
//!
//! Candidate jumps arrive at the constant rate λ̃ ≥ λ and are kept with
//! probability λ(t, x)/λ̃; a rejected candidate is a jump of size zero. The
//! thinned process has the same law as the original one, but w̃_m and ṽ_m
//! stop at the m-th candidate, zero-sized or not, so they count more events
//! and progress more slowly per step than w_m and v_m. The de-jumped form
//! kills at the constant rate λ̃ and feeds the rejected mass back through
//!
//! ```text
//! G̃_{m−1} = (λ̃ − λ) w̃_{m−1} + G[w̃_{m−1}].
//! ```

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::harness::rng::RngStreamSpec;
use crate::harness::stats::McEstimate;
use crate::model::{JumpMeasure, Problem, ScalarField};
use crate::paths::{Killing, Law};
use crate::recursion::dejump::{dejump_general, jump_field, w0_grid, EstimatedGrid};
use crate::recursion::deterministic::DEFAULT_TOL;
use crate::recursion::estimators::{
    estimate_w0, estimate_wm_law, relay_law, two_routes_law, vm_law, McSettings, TwoRoute,
};
use crate::recursion::grid::{GridFunction, GridSpec};

/// ν̃: the base jump law scaled by λ/λ̃ plus an atom at the origin.
#[derive(Clone)]
pub struct ThinnedMeasure {
    pub base: JumpMeasure,
    pub rate: ScalarField,
    pub rate_bound: f64,
}

impl std::fmt::Debug for ThinnedMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ThinnedMeasure")
            .field("kind", &self.base.kind())
            .field("rate_bound", &self.rate_bound)
            .finish()
    }
}

impl ThinnedMeasure {
    /// Probability of λ/λ̃ failing to accept: the atom at zero. Errors when
    /// λ(t, x) exceeds λ̃.
    pub fn mass_at_origin(&self, t: f64, x: &[f64]) -> Result<f64> {
        let lam = self.rate.eval(t, x);
        if lam > self.rate_bound * (1.0 + 1e-12) {
            return Err(Error::Dominance { time: t, state: x.to_vec(), rate: lam, bound: self.rate_bound });
        }
        if self.rate_bound == 0.0 {
            return Ok(1.0);
        }
        Ok((1.0 - lam / self.rate_bound).clamp(0.0, 1.0))
    }

    /// Draws from ν̃ into `out`; returns whether the jump is nonzero.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R, t: f64, x: &[f64], out: &mut [f64]) -> Result<bool> {
        let stay = self.mass_at_origin(t, x)?;
        if rng.random::<f64>() < stay {
            out.iter_mut().for_each(|o| *o = 0.0);
            return Ok(false);
        }
        self.base.sample(rng, x, out);
        Ok(true)
    }
}

fn rate_bound(p: &Problem) -> Result<f64> {
    match p.rate_bound {
        Some(b) if b >= 0.0 && b.is_finite() => Ok(b),
        Some(b) => Err(Error::Config(format!("rate bound {b} must be finite and nonnegative"))),
        None => Err(Error::Config("thinning needs a rate bound".into())),
    }
}

/// ν̃ for the problem's rate bound.
pub fn build_thinned_measure(p: &Problem) -> Result<ThinnedMeasure> {
    Ok(ThinnedMeasure { base: p.jump_measure.clone(), rate: p.jump_rate.clone(), rate_bound: rate_bound(p)? })
}

/// Which thinned iterate to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThinnedKind {
    W,
    V,
}

/// Direct estimate of w̃_m (w_0 paid at the m-th candidate) or ṽ_m
/// (nothing paid there). w̃_0 is w_0.
pub fn estimate_thinned(
    p: &Problem,
    kind: ThinnedKind,
    m: usize,
    t: f64,
    x: &[f64],
    s: &McSettings,
    rng: &RngStreamSpec,
) -> Result<McEstimate> {
    rate_bound(p)?;
    match (kind, m) {
        (ThinnedKind::W, 0) => estimate_w0(p, t, x, s, rng),
        (ThinnedKind::W, _) => estimate_wm_law(p, Law::Thinned, m, t, x, s, rng),
        (ThinnedKind::V, _) => vm_law(p, Law::Thinned, m, t, x, s, rng),
    }
}

/// Relay estimate of w̃_m from a tabulated w̃_{m−n}, stopping at the n-th
/// candidate.
#[allow(clippy::too_many_arguments)]
pub fn estimate_thinned_relay(
    p: &Problem,
    m: usize,
    n: usize,
    prev: &GridFunction,
    t: f64,
    x: &[f64],
    s: &McSettings,
    rng: &RngStreamSpec,
) -> Result<McEstimate> {
    rate_bound(p)?;
    relay_law(p, Law::Thinned, m, n, prev, t, x, s, rng)
}

/// Two-route identities for the thinned iterates; the carrier tabulates
/// ṽ_{n+1} or w̃_n.
#[allow(clippy::too_many_arguments)]
pub fn advance_two_routes_thinned(
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
    rate_bound(p)?;
    two_routes_law(p, Law::Thinned, identity, m, n, carrier, t, x, s, rng)
}

/// One thinned de-jumped step: w̃_m on `grid` from `w_prev` = w̃_{m−1}
/// (`None` for a zero carrier).
pub fn dejump_step_thinned(
    p: &Problem,
    w_prev: Option<&GridFunction>,
    grid: &GridSpec,
    s: &McSettings,
    rng: &RngStreamSpec,
) -> Result<EstimatedGrid> {
    let bound = rate_bound(p)?;
    let base = jump_field(p, w_prev, grid, DEFAULT_TOL * 1e-2)?;
    let field = |t: f64, x: &[f64]| {
        let extra = match w_prev {
            Some(c) => (bound - p.jump_rate.eval(t, x)) * c.eval(t, x),
            None => 0.0,
        };
        base(t, x) + extra
    };
    dejump_general(p, grid, s, rng, Killing::Constant(bound), &field)
}

/// w̃_0, …, w̃_{m_max} on `grid` by repeated thinned steps, each with its own
/// child stream.
pub fn thinned_sequence(
    p: &Problem,
    m_max: usize,
    grid: &GridSpec,
    s: &McSettings,
    rng: &RngStreamSpec,
) -> Result<Vec<EstimatedGrid>> {
    rate_bound(p)?;
    let mut out = vec![w0_grid(p, grid, s, &rng.child(0))?];
    for m in 1..=m_max {
        let next = dejump_step_thinned(p, Some(&out[m - 1].values), grid, s, &rng.child(m as u64))?;
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Diffusion, Domain, VectorField};
    use crate::recursion::dejump::dejump_step;
    use crate::recursion::estimators::estimate_wm_direct;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ruin(bound: f64) -> Problem {
        Problem::new(1, 1.0)
            .with_drift(VectorField::Const(vec![1.0]))
            .with_jumps(ScalarField::Const(1.0), JumpMeasure::dirac(vec![-1.0]))
            .with_domain(Domain::interval(0.0, f64::INFINITY).unwrap())
            .with_exit(|_, _, _| 1.0)
            .with_reference_w0(|_, _| 0.0)
            .with_rate_bound(Some(bound))
    }

    fn bump() -> Problem {
        Problem::new(1, 1.0)
            .with_diffusion(Diffusion::scalar(0.5))
            .with_domain(Domain::interval(-1.0, 1.0).unwrap())
            .with_terminal(|_| 1.0)
            .with_jumps(ScalarField::func(|_, x| 1.0 - x[0] * x[0]), JumpMeasure::dirac(vec![0.5]))
            .with_rate_bound(Some(1.0))
    }

    #[test]
    fn origin_mass() {
        let p = bump();
        let nu = build_thinned_measure(&p).unwrap();
        assert_eq!(nu.mass_at_origin(0.0, &[0.0]).unwrap(), 0.0);
        assert!((nu.mass_at_origin(0.0, &[0.5]).unwrap() - 0.25).abs() < 1e-15);
        let z = p.clone().with_jumps(ScalarField::Const(0.0), JumpMeasure::dirac(vec![0.5]));
        assert_eq!(build_thinned_measure(&z).unwrap().mass_at_origin(0.3, &[0.1]).unwrap(), 1.0);
        let over = p.clone().with_rate_bound(Some(0.5));
        assert!(matches!(build_thinned_measure(&over).unwrap().mass_at_origin(0.0, &[0.0]), Err(Error::Dominance { .. })));
        assert!(matches!(build_thinned_measure(&p.clone().with_rate_bound(None)), Err(Error::Config(_))));
    }

    #[test]
    fn sampling_frequency() {
        let nu = build_thinned_measure(&bump()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut out = [0.0];
        let n = 100_000;
        let kept = (0..n).filter(|_| nu.sample(&mut rng, 0.0, &[0.5], &mut out).unwrap()).count();
        let f = kept as f64 / n as f64;
        assert!((f - 0.75).abs() < 4.0 * (0.75f64 * 0.25 / n as f64).sqrt(), "{f}");
    }

    #[test]
    fn equal_bound_matches_plain_iterates() {
        let p = ruin(1.0);
        let s = McSettings::new(20_000, 1e-3);
        let a = estimate_thinned(&p, ThinnedKind::W, 2, 0.0, &[0.5], &s, &RngStreamSpec::new(9)).unwrap();
        let b = estimate_wm_direct(&p, 2, 0.0, &[0.5], &s, &RngStreamSpec::new(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn thinned_iterates_lag() {
        // With λ̃ = 2 half the candidates are empty, so w̃_1 < w_1.
        let p = ruin(2.0);
        let s = McSettings::new(20_000, 1e-3);
        let w = 1.0 - (-1.0f64).exp();
        let e = estimate_thinned(&p, ThinnedKind::W, 1, 0.0, &[0.0], &s, &RngStreamSpec::new(3)).unwrap();
        // First candidate at Exp(2), fatal when accepted.
        let exact = 0.5 * (1.0 - (-2.0f64).exp());
        assert!(e.z_to(exact) < 4.0, "{e:?} vs {exact}");
        assert!(e.mean < w);
        let v = estimate_thinned(&p, ThinnedKind::V, 1, 0.0, &[0.0], &s, &RngStreamSpec::new(3)).unwrap();
        assert_eq!(v, e);
    }

    #[test]
    fn zero_rate_fixed_point_is_w0() {
        // Far walls and a linear payoff: w_0(t, x) = x + b(T − t), which the
        // grid carries exactly. The extra λ̃ killing is then compensated.
        let g = GridSpec::uniform_1d(0.0, 1.0, 3, -1.0, 1.0, 5).unwrap();
        let wide = GridSpec::uniform_1d(0.0, 1.0, 3, -4.0, 4.0, 9).unwrap();
        let w0 = GridFunction::tabulate(wide, crate::recursion::grid::OutOfWindow::Clamp, |t, x| x[0] + 0.5 * (1.0 - t));
        for sigma in [0.0, 0.5] {
            let p = Problem::new(1, 1.0)
                .with_drift(VectorField::Const(vec![0.5]))
                .with_diffusion(Diffusion::scalar(sigma))
                .with_domain(Domain::interval(-10.0, 10.0).unwrap())
                .with_terminal(|x| x[0])
                .with_rate_bound(Some(2.0));
            let s = McSettings::new(2000, 4e-3);
            let step = dejump_step_thinned(&p, Some(&w0), &g, &s, &RngStreamSpec::new(1)).unwrap();
            for k in 0..g.len() {
                let (t, x) = g.node(k);
                let (a, b) = (step.values.values()[k], w0.eval(t, &x));
                let se = step.stderr.values()[k];
                assert!((a - b).abs() <= 4.0 * se + 1e-5, "sigma={sigma} node {k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn equal_bound_step_matches_plain_step() {
        let p = bump().with_jumps(ScalarField::Const(1.0), JumpMeasure::dirac(vec![0.5]));
        let g = GridSpec::uniform_1d(0.0, 1.0, 3, -1.0, 1.0, 5).unwrap();
        let s = McSettings::new(500, 1e-2);
        let prev = GridFunction::tabulate(g.clone(), crate::recursion::grid::OutOfWindow::Clamp, |t, _| 1.0 - 0.5 * t);
        let a = dejump_step_thinned(&p, Some(&prev), &g, &s, &RngStreamSpec::new(4)).unwrap();
        let b = dejump_step(&p, Some(&prev), &g, &s, &RngStreamSpec::new(4)).unwrap();
        assert!(a.values.max_abs_diff(&b.values).unwrap() < 1e-12);
    }
}
