//! Problem definition: coefficients, jump mechanism, domain and payoffs of
//!
//! ```text
//! dX_s = b(s, X_s) ds + σ(s, X_s) dW_s + jumps at rate λ(s, X_{s-}) with sizes ~ ν(dz; X_{s-})
//! u(t, x) = E[ 1(η > T) Θ g(X_T) + 1(η ≤ T) Θ Ψ(η, X_η, X_{η-}) − ∫ Θ φ ds ],  Θ = exp(−∫ r ds)
//! ```
//!
//! where η is the first exit time from the closure of the domain.

use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::harness::quad::integrate_1d;

pub type ScalarFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;
pub type TerminalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type ExitFn = Arc<dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync>;
pub type MembershipFn = Arc<dyn Fn(&[f64]) -> Location + Send + Sync>;
pub type JumpSampler = Arc<dyn Fn(&mut dyn RngCore, &[f64], &mut [f64]) + Send + Sync>;
/// `(x, domain, f_in, f_out, tol) -> (∫_{x+z∈D̄} f_in(x+z) ν(dz;x), ∫_{x+z∉D̄} f_out(x+z) ν(dz;x))`
pub type JumpIntegrator = Arc<
    dyn Fn(&[f64], &Domain, &dyn Fn(&[f64]) -> f64, &dyn Fn(&[f64]) -> f64, f64) -> Result<(f64, f64)>
        + Send
        + Sync,
>;

/// Anything that can be evaluated at `(t, x)`: closures, tabulated grids,
/// series solutions.
pub trait ValueField: Send + Sync {
    fn value(&self, t: f64, x: &[f64]) -> f64;
}

impl<F> ValueField for F
where
    F: Fn(f64, &[f64]) -> f64 + Send + Sync,
{
    fn value(&self, t: f64, x: &[f64]) -> f64 {
        self(t, x)
    }
}

/// Scalar coefficient. Constants are kept symbolic so that exact exponentials
/// and affine shortcuts can be used.
#[derive(Clone)]
pub enum ScalarField {
    Const(f64),
    Func(ScalarFn),
}

impl ScalarField {
    pub fn func(f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField::Func(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            ScalarField::Const(c) => *c,
            ScalarField::Func(f) => f(t, x),
        }
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            ScalarField::Const(c) => Some(*c),
            ScalarField::Func(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }
}

impl ValueField for ScalarField {
    fn value(&self, t: f64, x: &[f64]) -> f64 {
        self.eval(t, x)
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Const(c) => write!(f, "Const({c})"),
            ScalarField::Func(_) => write!(f, "Func"),
        }
    }
}

/// Drift coefficient b.
#[derive(Clone)]
pub enum VectorField {
    Const(Vec<f64>),
    Func(VectorFn),
}

impl VectorField {
    pub fn func(f: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        VectorField::Func(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        match self {
            VectorField::Const(v) => out.copy_from_slice(v),
            VectorField::Func(f) => f(t, x, out),
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, VectorField::Const(_))
    }
}

/// Diffusion coefficient σ as a row-major `d × noise_dim` matrix.
#[derive(Clone)]
pub enum Diffusion {
    Zero,
    Const { noise_dim: usize, matrix: Vec<f64> },
    Func { noise_dim: usize, f: VectorFn },
}

impl Diffusion {
    /// Scalar volatility for a one-dimensional state.
    pub fn scalar(sigma: f64) -> Self {
        if sigma == 0.0 {
            Diffusion::Zero
        } else {
            Diffusion::Const { noise_dim: 1, matrix: vec![sigma] }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Diffusion::Zero)
    }

    pub fn noise_dim(&self) -> usize {
        match self {
            Diffusion::Zero => 0,
            Diffusion::Const { noise_dim, .. } | Diffusion::Func { noise_dim, .. } => *noise_dim,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        match self {
            Diffusion::Zero => out.iter_mut().for_each(|v| *v = 0.0),
            Diffusion::Const { matrix, .. } => out.copy_from_slice(matrix),
            Diffusion::Func { f, .. } => f(t, x, out),
        }
    }
}

/// Position of a state relative to the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

impl Location {
    /// In the closure D̄.
    pub fn in_closure(self) -> bool {
        self != Location::Outside
    }
}

#[derive(Clone)]
enum DomainKind {
    Interval { lo: f64, hi: f64 },
    Predicate { dim: usize, f: MembershipFn },
}

/// Open convex domain D with a classification tolerance for ∂D.
#[derive(Clone)]
pub struct Domain {
    kind: DomainKind,
    tol: f64,
}

impl Domain {
    /// One-dimensional interval `(lo, hi)`; either end may be infinite.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::arg(format!("empty interval ({lo}, {hi})")));
        }
        let diam = hi - lo;
        let tol = if diam.is_finite() { 1e-12 * diam } else { 1e-12 };
        Ok(Self { kind: DomainKind::Interval { lo, hi }, tol })
    }

    /// Membership given by a user predicate, which is responsible for its own
    /// boundary tolerance.
    pub fn predicate(dim: usize, f: impl Fn(&[f64]) -> Location + Send + Sync + 'static) -> Self {
        Self { kind: DomainKind::Predicate { dim, f: Arc::new(f) }, tol: 1e-12 }
    }

    /// All of ℝ^d.
    pub fn whole(dim: usize) -> Self {
        if dim == 1 {
            Self::interval(f64::NEG_INFINITY, f64::INFINITY).expect("nonempty")
        } else {
            Self::predicate(dim, |_| Location::Inside)
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Interval ends when the domain is a 1-D interval.
    pub fn interval_bounds(&self) -> Option<(f64, f64)> {
        match self.kind {
            DomainKind::Interval { lo, hi } => Some((lo, hi)),
            DomainKind::Predicate { .. } => None,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            DomainKind::Interval { .. } => 1,
            DomainKind::Predicate { dim, .. } => *dim,
        }
    }

    #[inline]
    pub fn classify(&self, x: &[f64]) -> Location {
        match &self.kind {
            DomainKind::Interval { lo, hi } => {
                let v = x[0];
                if v < lo - self.tol || v > hi + self.tol {
                    Location::Outside
                } else if (v - lo).abs() <= self.tol || (v - hi).abs() <= self.tol {
                    Location::Boundary
                } else {
                    Location::Inside
                }
            }
            DomainKind::Predicate { f, .. } => f(x),
        }
    }

    #[inline]
    pub fn in_closure(&self, x: &[f64]) -> bool {
        self.classify(x).in_closure()
    }
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DomainKind::Interval { lo, hi } => write!(f, "Interval({lo}, {hi})"),
            DomainKind::Predicate { dim, .. } => write!(f, "Predicate(d={dim})"),
        }
    }
}

/// Gaussian truncation in units of standard deviation.
pub const GAUSS_TRUNCATION: f64 = 8.0;

/// Jump-size law ν(dz; x), a probability measure on ℝ^d∖{0}.
#[derive(Clone)]
pub enum JumpMeasure {
    /// Finitely many state-independent atoms `(shift, weight)`.
    PointMass { atoms: Vec<(Vec<f64>, f64)> },
    /// Isotropic centred Gaussian with per-coordinate variance.
    Gaussian { variance: f64 },
    /// User-supplied sampler and restricted integrator.
    Custom { sampler: JumpSampler, integrator: JumpIntegrator },
}

/// Kind tag of a jump measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpKind {
    PointMass,
    Gaussian,
    Custom,
}

impl JumpMeasure {
    pub fn dirac(shift: Vec<f64>) -> Self {
        JumpMeasure::PointMass { atoms: vec![(shift, 1.0)] }
    }

    pub fn kind(&self) -> JumpKind {
        match self {
            JumpMeasure::PointMass { .. } => JumpKind::PointMass,
            JumpMeasure::Gaussian { .. } => JumpKind::Gaussian,
            JumpMeasure::Custom { .. } => JumpKind::Custom,
        }
    }

    /// Draws a jump vector for pre-jump state `x` into `out`.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R, x: &[f64], out: &mut [f64]) {
        match self {
            JumpMeasure::PointMass { atoms } => {
                let idx = if atoms.len() == 1 {
                    0
                } else {
                    let mut u = rand::Rng::random::<f64>(rng);
                    let mut k = atoms.len() - 1;
                    for (i, (_, w)) in atoms.iter().enumerate() {
                        if u < *w {
                            k = i;
                            break;
                        }
                        u -= w;
                    }
                    k
                };
                out.copy_from_slice(&atoms[idx].0);
            }
            JumpMeasure::Gaussian { variance } => {
                let s = variance.sqrt();
                for o in out.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *o = s * z;
                }
            }
            JumpMeasure::Custom { sampler, .. } => {
                let mut adapter = DynRng(rng);
                sampler(&mut adapter, x, out)
            }
        }
    }

    /// Splits `∫ f(x+z) ν(dz; x)` over landing inside and outside D̄, with
    /// `f_in` used on the first region and `f_out` on the second.
    pub fn restricted_integrals(
        &self,
        x: &[f64],
        domain: &Domain,
        f_in: &dyn Fn(&[f64]) -> f64,
        f_out: &dyn Fn(&[f64]) -> f64,
        tol: f64,
    ) -> Result<(f64, f64)> {
        match self {
            JumpMeasure::PointMass { atoms } => {
                let mut y = x.to_vec();
                let (mut a, mut b) = (0.0, 0.0);
                for (z, w) in atoms {
                    for i in 0..y.len() {
                        y[i] = x[i] + z[i];
                    }
                    if domain.in_closure(&y) {
                        a += w * f_in(&y);
                    } else {
                        b += w * f_out(&y);
                    }
                }
                Ok((a, b))
            }
            JumpMeasure::Gaussian { variance } => {
                if x.len() != 1 {
                    return Err(Error::Unsupported(
                        "Gaussian restricted integrals are implemented for d = 1 only".into(),
                    ));
                }
                let s = variance.sqrt();
                let x0 = x[0];
                let (lo, hi) = domain.interval_bounds().unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
                let a = x0 - GAUSS_TRUNCATION * s;
                let b = x0 + GAUSS_TRUNCATION * s;
                let norm = 1.0 / (2.0 * std::f64::consts::PI * variance).sqrt();
                let dens = |y: f64| norm * (-(y - x0) * (y - x0) / (2.0 * variance)).exp();
                let piece = |f: &dyn Fn(&[f64]) -> f64, u: f64, v: f64| -> Result<f64> {
                    if v <= u {
                        return Ok(0.0);
                    }
                    Ok(integrate_1d(|y| dens(y) * f(&[y]), u, v, tol / 3.0)?.value)
                };
                let inside = piece(f_in, a.max(lo), b.min(hi))?;
                let left = piece(f_out, a, b.min(lo))?;
                let right = piece(f_out, a.max(hi), b)?;
                Ok((inside, left + right))
            }
            JumpMeasure::Custom { integrator, .. } => integrator(x, domain, f_in, f_out, tol),
        }
    }
}

struct DynRng<'a, R: RngCore + ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for DynRng<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
}

impl fmt::Debug for JumpMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpMeasure::PointMass { atoms } => write!(f, "PointMass({atoms:?})"),
            JumpMeasure::Gaussian { variance } => write!(f, "Gaussian({variance})"),
            JumpMeasure::Custom { .. } => write!(f, "Custom"),
        }
    }
}

/// A complete problem instance. Immutable once built; all function fields
/// must be pure.
#[derive(Clone)]
pub struct Problem {
    pub dim: usize,
    pub drift: VectorField,
    pub diffusion: Diffusion,
    pub discount_rate: ScalarField,
    pub jump_rate: ScalarField,
    pub jump_measure: JumpMeasure,
    pub domain: Domain,
    pub terminal_payoff: TerminalFn,
    pub exit_payoff: ExitFn,
    pub running_cost: ScalarField,
    pub horizon: f64,
    pub rate_bound: Option<f64>,
    /// Closed form for w_0 when known; estimators use it instead of nesting.
    pub reference_w0: Option<ScalarFn>,
    /// Closed form for ξ(·,·;0) when known.
    pub reference_xi: Option<ScalarFn>,
}

impl Problem {
    /// A problem with zero coefficients, no jumps, ℝ^d as domain and zero
    /// payoffs; set fields with the `with_*` methods.
    pub fn new(dim: usize, horizon: f64) -> Self {
        Self {
            dim,
            drift: VectorField::Const(vec![0.0; dim]),
            diffusion: Diffusion::Zero,
            discount_rate: ScalarField::Const(0.0),
            jump_rate: ScalarField::Const(0.0),
            jump_measure: JumpMeasure::Gaussian { variance: 1.0 },
            domain: Domain::whole(dim),
            terminal_payoff: Arc::new(|_| 0.0),
            exit_payoff: Arc::new(|_, _, _| 0.0),
            running_cost: ScalarField::Const(0.0),
            horizon,
            rate_bound: None,
            reference_w0: None,
            reference_xi: None,
        }
    }

    pub fn with_drift(mut self, b: VectorField) -> Self {
        self.drift = b;
        self
    }
    pub fn with_diffusion(mut self, s: Diffusion) -> Self {
        self.diffusion = s;
        self
    }
    pub fn with_discount(mut self, r: ScalarField) -> Self {
        self.discount_rate = r;
        self
    }
    pub fn with_jumps(mut self, rate: ScalarField, measure: JumpMeasure) -> Self {
        self.jump_rate = rate;
        self.jump_measure = measure;
        self
    }
    pub fn with_domain(mut self, d: Domain) -> Self {
        self.domain = d;
        self
    }
    pub fn with_terminal(mut self, g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.terminal_payoff = Arc::new(g);
        self
    }
    pub fn with_exit(mut self, psi: impl Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.exit_payoff = Arc::new(psi);
        self
    }
    pub fn with_running_cost(mut self, phi: ScalarField) -> Self {
        self.running_cost = phi;
        self
    }
    pub fn with_rate_bound(mut self, bound: Option<f64>) -> Self {
        self.rate_bound = bound;
        self
    }
    pub fn with_reference_w0(mut self, f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.reference_w0 = Some(Arc::new(f));
        self
    }
    pub fn with_reference_xi(mut self, f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.reference_xi = Some(Arc::new(f));
        self
    }

    /// The same problem with jumps switched off (the law P_0).
    pub fn without_jumps(&self) -> Self {
        let mut p = self.clone();
        p.jump_rate = ScalarField::Const(0.0);
        p
    }

    pub fn has_jumps(&self) -> bool {
        !self.jump_rate.is_zero()
    }

    /// Ψ(t, x, x) for diffusive exits.
    #[inline]
    pub fn boundary_payoff(&self, t: f64, x: &[f64]) -> f64 {
        (self.exit_payoff)(t, x, x)
    }

    fn check_shapes(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::arg("state dimension must be positive"));
        }
        if let VectorField::Const(v) = &self.drift {
            if v.len() != self.dim {
                return Err(Error::arg("constant drift has wrong length"));
            }
        }
        if let Diffusion::Const { noise_dim, matrix } = &self.diffusion {
            if matrix.len() != self.dim * noise_dim {
                return Err(Error::arg("constant diffusion matrix has wrong size"));
            }
        }
        if let JumpMeasure::PointMass { atoms } = &self.jump_measure {
            if atoms.is_empty() || atoms.iter().any(|(z, _)| z.len() != self.dim) {
                return Err(Error::arg("point-mass atoms missing or of wrong length"));
            }
        }
        if self.domain.dim() != self.dim {
            return Err(Error::arg("domain dimension differs from state dimension"));
        }
        Ok(())
    }
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("dim", &self.dim)
            .field("jump_rate", &self.jump_rate)
            .field("jump_measure", &self.jump_measure)
            .field("domain", &self.domain)
            .field("horizon", &self.horizon)
            .field("rate_bound", &self.rate_bound)
            .finish_non_exhaustive()
    }
}

/// Time-state sample points for validation.
#[derive(Debug, Clone)]
pub struct SampleGrid {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl SampleGrid {
    pub fn new(times: Vec<f64>, states: Vec<Vec<f64>>) -> Self {
        Self { times, states }
    }

    /// Uniform grid over `[0, T] × [lo, hi]` for a 1-D problem.
    pub fn uniform_1d(horizon: f64, n_t: usize, lo: f64, hi: f64, n_x: usize) -> Self {
        let lin = |a: f64, b: f64, n: usize| -> Vec<f64> {
            if n <= 1 {
                vec![a]
            } else {
                (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
            }
        };
        Self {
            times: lin(0.0, horizon, n_t),
            states: lin(lo, hi, n_x).into_iter().map(|x| vec![x]).collect(),
        }
    }
}

/// A single failed check.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveHorizon(f64),
    NegativeRate { t: f64, x: Vec<f64>, rate: f64 },
    RateBoundExceeded { t: f64, x: Vec<f64>, rate: f64, bound: f64 },
    NegativeDiscount { t: f64, x: Vec<f64>, rate: f64 },
    MassDefect { x: Vec<f64>, mass: f64 },
    NonFinite { t: f64, x: Vec<f64>, field: &'static str },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveHorizon(t) => write!(f, "horizon T={t} is not positive"),
            Violation::NegativeRate { t, x, rate } => write!(f, "λ({t},{x:?})={rate} < 0"),
            Violation::RateBoundExceeded { t, x, rate, bound } => {
                write!(f, "λ({t},{x:?})={rate} > rate bound {bound}")
            }
            Violation::NegativeDiscount { t, x, rate } => write!(f, "r({t},{x:?})={rate} < 0"),
            Violation::MassDefect { x, mass } => write!(f, "ν(·;{x:?}) has mass {mass}"),
            Violation::NonFinite { t, x, field } => write!(f, "{field} not finite at ({t},{x:?})"),
        }
    }
}

/// Outcome of [`validate_problem`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Sample-based check of the standing assumptions on a time-state grid.
pub fn validate_problem(p: &Problem, grid: &SampleGrid) -> Result<ValidationReport> {
    p.check_shapes()?;
    if grid.times.is_empty() || grid.states.is_empty() {
        return Err(Error::arg("validation grid is empty"));
    }
    for x in &grid.states {
        if x.len() != p.dim || !p.domain.in_closure(x) {
            return Err(Error::arg(format!("validation state {x:?} is not in the closed domain")));
        }
    }
    let mut out = ValidationReport::default();
    if !(p.horizon > 0.0) {
        out.violations.push(Violation::NonPositiveHorizon(p.horizon));
    }
    let d = p.dim;
    let nd = p.diffusion.noise_dim();
    let mut bv = vec![0.0; d];
    let mut sv = vec![0.0; d * nd];
    for x in &grid.states {
        let (a, b) = p.jump_measure.restricted_integrals(x, &p.domain, &|_| 1.0, &|_| 1.0, 1e-12)?;
        if (a + b - 1.0).abs() > 1e-8 {
            out.violations.push(Violation::MassDefect { x: x.clone(), mass: a + b });
        }
        if !(p.terminal_payoff)(x).is_finite() {
            out.violations.push(Violation::NonFinite { t: p.horizon, x: x.clone(), field: "terminal payoff" });
        }
        for &t in &grid.times {
            let nf = |field| Violation::NonFinite { t, x: x.clone(), field };
            let lam = p.jump_rate.eval(t, x);
            if !lam.is_finite() {
                out.violations.push(nf("jump rate"));
            } else if lam < 0.0 {
                out.violations.push(Violation::NegativeRate { t, x: x.clone(), rate: lam });
            } else if let Some(bound) = p.rate_bound {
                if lam > bound * (1.0 + 1e-12) {
                    out.violations.push(Violation::RateBoundExceeded { t, x: x.clone(), rate: lam, bound });
                }
            }
            let r = p.discount_rate.eval(t, x);
            if !r.is_finite() {
                out.violations.push(nf("discount rate"));
            } else if r < 0.0 {
                out.violations.push(Violation::NegativeDiscount { t, x: x.clone(), rate: r });
            }
            if !p.running_cost.eval(t, x).is_finite() {
                out.violations.push(nf("running cost"));
            }
            p.drift.eval(t, x, &mut bv);
            if bv.iter().any(|v| !v.is_finite()) {
                out.violations.push(nf("drift"));
            }
            p.diffusion.eval(t, x, &mut sv);
            if sv.iter().any(|v| !v.is_finite()) {
                out.violations.push(nf("diffusion"));
            }
        }
    }
    Ok(out)
}
