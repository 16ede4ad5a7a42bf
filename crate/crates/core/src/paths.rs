//! Trajectory simulation under P_λ (jumps at rate λ), P_0 (jumps suppressed)
//! and the thinned law (candidates at the constant bound λ̃, rejected
//! candidates kept as zero-sized jumps).
//!
//! The skeleton is a jump-adapted Euler scheme on a fixed grid of step `h`.
//! Brownian increments are drawn once per grid step; when a jump candidate
//! falls inside a step, the Brownian value at that instant is filled in by a
//! bridge draw from a separate stream. The grid-time noise is therefore the
//! same whatever the jump law, and a jump-free path under P_λ reproduces the
//! P_0 path draw for draw.
//!
//! Exits are detected at skeleton points. For one-dimensional interval
//! domains with a diffusion part the default also applies the Brownian-bridge
//! crossing probability `exp(-2 d_0 d_1 / (σ² Δ))` on every sub-step, which
//! removes the O(√h) bias of discrete monitoring; with constant coefficients
//! the exit indicator is then exact. [`ExitMonitoring::Discrete`] gives the
//! plain scheme.
//!
//! Problems without diffusion, with constant drift, discount, running cost
//! and jump rate, are advanced in closed form between events.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::harness::rng::{RngStreamSpec, StreamTag};
use crate::model::{Diffusion, Location, Problem, VectorField};

/// Which law drives the jumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Law {
    /// P_0: no jumps.
    Suppressed,
    /// P_λ: jumps at rate λ(t, X_{t-}).
    Intensity,
    /// Thinned: candidates at rate λ̃, every candidate counts as a jump.
    Thinned,
}

/// Exit detection between skeleton points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitMonitoring {
    /// Only skeleton points are checked.
    Discrete,
    /// Skeleton points plus the Brownian-bridge crossing probability.
    Bridge,
}

/// Killing factor applied to a source integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Killing {
    None,
    /// Λ_{t,s} = exp(−∫ λ).
    Intensity,
    /// exp(−λ̃ (s − t)).
    Constant(f64),
}

impl Killing {
    #[inline]
    pub fn factor(&self, elapsed: f64, intensity: f64) -> f64 {
        match *self {
            Killing::None => 1.0,
            Killing::Intensity => (-intensity).exp(),
            Killing::Constant(l) => (-l * elapsed).exp(),
        }
    }
}

/// A field integrated along the path as `∫ Θ K f(s, X_s) ds`.
pub struct Source<'a> {
    pub field: &'a (dyn Fn(f64, &[f64]) -> f64 + Sync),
    pub killing: Killing,
}

/// Simulation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PathConfig {
    pub step: f64,
    pub max_jumps: Option<usize>,
    pub record_skeleton: bool,
    /// `None` picks the bridge where it applies.
    pub monitoring: Option<ExitMonitoring>,
}

impl PathConfig {
    pub fn new(step: f64) -> Self {
        Self { step, max_jumps: None, record_skeleton: false, monitoring: None }
    }

    pub fn max_jumps(mut self, m: Option<usize>) -> Self {
        self.max_jumps = m;
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_skeleton = true;
        self
    }

    pub fn monitoring(mut self, m: Option<ExitMonitoring>) -> Self {
        self.monitoring = m;
        self
    }
}

/// Default step, 10⁻³ of the horizon.
pub fn default_step(p: &Problem) -> f64 {
    1e-3 * p.horizon
}

/// The four random streams of one replication.
pub struct PathStreams {
    pub diffusion: ChaCha8Rng,
    pub jumps: ChaCha8Rng,
    pub bridge: ChaCha8Rng,
    pub monitor: ChaCha8Rng,
}

impl PathStreams {
    pub fn new(spec: &RngStreamSpec, replication: u64) -> Self {
        Self {
            diffusion: spec.stream(replication, StreamTag::Diffusion),
            jumps: spec.stream(replication, StreamTag::Jumps),
            bridge: spec.stream(replication, StreamTag::Bridge),
            monitor: spec.stream(replication, StreamTag::Monitor),
        }
    }
}

/// Path integrals accumulated from the start time.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Integrals {
    /// ∫ r ds
    pub discount: f64,
    /// ∫ λ ds
    pub intensity: f64,
    /// ∫ Θ φ ds
    pub running_cost: f64,
    /// ∫ Θ ds
    pub discounted_time: f64,
    /// ∫ Θ K f ds for the optional source
    pub source: f64,
}

impl Integrals {
    /// Θ = exp(−∫ r).
    pub fn theta(&self) -> f64 {
        (-self.discount).exp()
    }

    /// Λ = exp(−∫ λ).
    pub fn lambda(&self) -> f64 {
        (-self.intensity).exp()
    }
}

/// A jump (or zero-sized thinning candidate).
#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub pre: Vec<f64>,
    pub post: Vec<f64>,
    pub zero_sized: bool,
    pub integrals: Integrals,
}

/// Why the path stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Diffusive exit, stopped on ∂D.
    BoundaryHit,
    /// A jump landed outside D̄.
    JumpOvershoot,
    /// Reached T inside D̄.
    Horizon,
    /// The configured jump count was reached inside D̄.
    JumpLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stop {
    pub time: f64,
    pub pre: Vec<f64>,
    pub post: Vec<f64>,
    pub reason: StopReason,
}

/// One simulated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub start_time: f64,
    pub start_state: Vec<f64>,
    /// Skeleton points, when recording was requested.
    pub skeleton: Vec<(f64, Vec<f64>)>,
    pub jumps: Vec<JumpEvent>,
    pub stop: Stop,
    pub integrals: Integrals,
    /// Jumps counted toward the limit (zero-sized ones included when thinned).
    pub jump_count: usize,
    /// Rate inversion never found a positive rate.
    pub inversion_stalled: bool,
}

impl PathRecord {
    /// The path left D̄ before T.
    pub fn exited(&self) -> bool {
        matches!(self.stop.reason, StopReason::BoundaryHit | StopReason::JumpOvershoot)
    }

    pub fn nonzero_jumps(&self) -> usize {
        self.jumps.iter().filter(|j| !j.zero_sized).count()
    }
}

/// Simulates under P_0.
pub fn simulate_p0_path(p: &Problem, t: f64, x: &[f64], step: f64, rng: &mut PathStreams) -> Result<PathRecord> {
    simulate_path(p, Law::Suppressed, t, x, &PathConfig::new(step), None, rng)
}

/// Simulates under P_λ up to exit, horizon or the `max_jumps`-th jump.
pub fn simulate_plambda_path(
    p: &Problem,
    t: f64,
    x: &[f64],
    step: f64,
    max_jumps: Option<usize>,
    rng: &mut PathStreams,
) -> Result<PathRecord> {
    simulate_path(p, Law::Intensity, t, x, &PathConfig::new(step).max_jumps(max_jumps), None, rng)
}

/// Simulates the thinned process; needs `p.rate_bound`.
pub fn simulate_thinned_path(
    p: &Problem,
    t: f64,
    x: &[f64],
    step: f64,
    max_jumps: Option<usize>,
    rng: &mut PathStreams,
) -> Result<PathRecord> {
    simulate_path(p, Law::Thinned, t, x, &PathConfig::new(step).max_jumps(max_jumps), None, rng)
}

enum Clock {
    Off,
    Thinning { bound: f64, next: f64 },
    Inversion { budget: f64 },
}

/// General entry point.
pub fn simulate_path(
    p: &Problem,
    law: Law,
    t: f64,
    x: &[f64],
    cfg: &PathConfig,
    source: Option<&Source<'_>>,
    rng: &mut PathStreams,
) -> Result<PathRecord> {
    if x.len() != p.dim {
        return Err(Error::arg(format!("start state has length {}, expected {}", x.len(), p.dim)));
    }
    if !(0.0..=p.horizon).contains(&t) {
        return Err(Error::arg(format!("start time {t} outside [0, {}]", p.horizon)));
    }
    if !(cfg.step > 0.0) {
        return Err(Error::arg("step must be positive"));
    }
    if !p.domain.in_closure(x) {
        return Err(Error::arg(format!("start state {x:?} is outside the closed domain")));
    }
    if law == Law::Thinned && p.rate_bound.is_none() {
        return Err(Error::Config("thinned simulation needs a rate bound".into()));
    }
    Sim::new(p, law, t, x, cfg, source, rng).run()
}

struct Sim<'a> {
    p: &'a Problem,
    law: Law,
    cfg: &'a PathConfig,
    source: Option<&'a Source<'a>>,
    rng: &'a mut PathStreams,
    t0: f64,
    clock: Clock,
    bridge: bool,
    affine: bool,
    rk4: bool,
    s: f64,
    x: Vec<f64>,
    acc: Integrals,
    count: usize,
    jumps: Vec<JumpEvent>,
    skeleton: Vec<(f64, Vec<f64>)>,
    dw: Vec<f64>,
    wcur: Vec<f64>,
    wtau: Vec<f64>,
    bbuf: Vec<f64>,
    sbuf: Vec<f64>,
    k: [Vec<f64>; 5],
}

impl<'a> Sim<'a> {
    fn new(
        p: &'a Problem,
        law: Law,
        t: f64,
        x: &[f64],
        cfg: &'a PathConfig,
        source: Option<&'a Source<'a>>,
        rng: &'a mut PathStreams,
    ) -> Self {
        let clock = match law {
            Law::Suppressed => Clock::Off,
            Law::Intensity if p.jump_rate.is_zero() => Clock::Off,
            Law::Intensity => match p.rate_bound {
                Some(b) if b > 0.0 => Clock::Thinning { bound: b, next: f64::NAN },
                Some(_) => Clock::Off,
                None => Clock::Inversion { budget: f64::NAN },
            },
            Law::Thinned => match p.rate_bound {
                Some(b) if b > 0.0 => Clock::Thinning { bound: b, next: f64::NAN },
                _ => Clock::Off,
            },
        };
        let diffusive = !p.diffusion.is_zero();
        let bridge_ok = diffusive && p.dim == 1 && p.domain.interval_bounds().is_some();
        let bridge = match cfg.monitoring {
            Some(ExitMonitoring::Discrete) => false,
            Some(ExitMonitoring::Bridge) | None => bridge_ok,
        };
        let affine = !diffusive
            && p.drift.is_const()
            && p.discount_rate.as_const().is_some()
            && p.running_cost.as_const().is_some()
            && p.jump_rate.as_const().is_some()
            && source.is_none();
        let rk4 = !diffusive && !p.drift.is_const();
        let d = p.dim;
        let nd = p.diffusion.noise_dim();
        Self {
            p,
            law,
            cfg,
            source,
            rng,
            t0: t,
            clock,
            bridge,
            affine,
            rk4,
            s: t,
            x: x.to_vec(),
            acc: Integrals::default(),
            count: 0,
            jumps: Vec::new(),
            skeleton: Vec::new(),
            dw: vec![0.0; nd],
            wcur: vec![0.0; nd],
            wtau: vec![0.0; nd],
            bbuf: vec![0.0; d],
            sbuf: vec![0.0; d * nd],
            k: [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]],
        }
    }

    fn finish(self, time: f64, pre: Vec<f64>, post: Vec<f64>, reason: StopReason) -> PathRecord {
        let stalled = matches!(self.clock, Clock::Inversion { .. }) && self.acc.intensity == 0.0;
        PathRecord {
            start_time: self.t0,
            start_state: if self.skeleton.is_empty() { Vec::new() } else { self.skeleton[0].1.clone() },
            skeleton: self.skeleton,
            jumps: self.jumps,
            stop: Stop { time, pre, post, reason },
            integrals: self.acc,
            jump_count: self.count,
            inversion_stalled: stalled,
        }
    }

    fn run(mut self) -> Result<PathRecord> {
        let start = self.x.clone();
        self.skeleton.push((self.t0, start.clone()));
        let record = self.cfg.record_skeleton;
        let horizon = self.p.horizon;
        let mut out = self.run_inner(horizon)?;
        out.start_state = start;
        if !record {
            out.skeleton.clear();
        }
        Ok(out)
    }

    fn run_inner(mut self, horizon: f64) -> Result<PathRecord> {
        if self.cfg.max_jumps == Some(0) {
            let x = self.x.clone();
            let t0 = self.t0;
            return Ok(self.finish(t0, x.clone(), x, StopReason::JumpLimit));
        }
        if self.t0 >= horizon {
            let x = self.x.clone();
            return Ok(self.finish(horizon, x.clone(), x, StopReason::Horizon));
        }
        if let Clock::Thinning { bound, next } = &mut self.clock {
            let e: f64 = Exp1.sample(&mut self.rng.jumps);
            *next = self.t0 + e / *bound;
        }
        if let Clock::Inversion { budget } = &mut self.clock {
            *budget = Exp1.sample(&mut self.rng.jumps);
        }
        let h = if self.affine { horizon - self.t0 } else { self.cfg.step };
        let nd = self.p.diffusion.noise_dim();
        let mut k: u64 = 0;
        loop {
            let a = self.s;
            let mut b = self.t0 + (k + 1) as f64 * h;
            if b > horizon - 1e-12 * horizon.max(1.0) {
                b = horizon;
            }
            if nd > 0 {
                let sq = (b - a).sqrt();
                for j in 0..nd {
                    let z: f64 = StandardNormal.sample(&mut self.rng.diffusion);
                    self.dw[j] = sq * z;
                }
                self.wcur.iter_mut().for_each(|v| *v = 0.0);
            }
            // Jump candidates inside (s, b].
            loop {
                let tau = match &self.clock {
                    Clock::Off => break,
                    Clock::Thinning { next, .. } => {
                        if *next > b {
                            break;
                        }
                        *next
                    }
                    Clock::Inversion { budget } => {
                        let lam = self.p.jump_rate.eval(self.s, &self.x).max(0.0);
                        if !(lam * (b - self.s) >= *budget) || lam == 0.0 {
                            break;
                        }
                        self.s + *budget / lam
                    }
                };
                let tau = tau.max(self.s);
                let pre = self.advance_to(tau, b)?;
                if let Some((eta, xe)) = self.exit_check(tau, &pre) {
                    return Ok(self.finish(eta, xe.clone(), xe, StopReason::BoundaryHit));
                }
                self.accumulate(self.s, &self.x.clone(), tau, &pre);
                let accepted = match &mut self.clock {
                    Clock::Thinning { bound, next } => {
                        let bound = *bound;
                        let u: f64 = self.rng.jumps.random();
                        let lam = self.p.jump_rate.eval(tau, &pre);
                        if !lam.is_finite() || lam < 0.0 {
                            return Err(Error::Simulation { time: tau, message: format!("jump rate {lam} at {pre:?}") });
                        }
                        if lam > bound * (1.0 + 1e-12) {
                            return Err(Error::Dominance { time: tau, state: pre, rate: lam, bound });
                        }
                        let e: f64 = Exp1.sample(&mut self.rng.jumps);
                        *next = tau + e / bound;
                        u * bound < lam
                    }
                    Clock::Inversion { budget } => {
                        *budget = Exp1.sample(&mut self.rng.jumps);
                        true
                    }
                    Clock::Off => unreachable!(),
                };
                self.s = tau;
                if accepted {
                    let mut z = vec![0.0; self.p.dim];
                    self.p.jump_measure.sample(&mut self.rng.jumps, &pre, &mut z);
                    let post: Vec<f64> = pre.iter().zip(&z).map(|(a, b)| a + b).collect();
                    self.count += 1;
                    self.jumps.push(JumpEvent {
                        time: tau,
                        pre: pre.clone(),
                        post: post.clone(),
                        zero_sized: false,
                        integrals: self.acc,
                    });
                    if self.cfg.record_skeleton {
                        self.skeleton.push((tau, post.clone()));
                    }
                    if !self.p.domain.in_closure(&post) {
                        return Ok(self.finish(tau, pre, post, StopReason::JumpOvershoot));
                    }
                    self.x = post;
                } else {
                    self.x = pre;
                    if self.law == Law::Thinned {
                        self.count += 1;
                        self.jumps.push(JumpEvent {
                            time: tau,
                            pre: self.x.clone(),
                            post: self.x.clone(),
                            zero_sized: true,
                            integrals: self.acc,
                        });
                    }
                }
                if self.cfg.max_jumps == Some(self.count) && (accepted || self.law == Law::Thinned) {
                    let last = self.jumps.last().expect("event recorded");
                    let (pre, post) = (last.pre.clone(), last.post.clone());
                    return Ok(self.finish(tau, pre, post, StopReason::JumpLimit));
                }
            }
            // Rest of the grid step.
            let lam_start = match self.clock {
                Clock::Inversion { .. } => self.p.jump_rate.eval(self.s, &self.x).max(0.0),
                _ => 0.0,
            };
            let s0 = self.s;
            let end = self.advance_to(b, b)?;
            if let Some((eta, xe)) = self.exit_check(b, &end) {
                return Ok(self.finish(eta, xe.clone(), xe, StopReason::BoundaryHit));
            }
            self.accumulate(s0, &self.x.clone(), b, &end);
            if let Clock::Inversion { budget } = &mut self.clock {
                *budget -= lam_start * (b - s0);
            }
            self.s = b;
            self.x = end;
            if self.cfg.record_skeleton {
                self.skeleton.push((b, self.x.clone()));
            }
            k += 1;
            if b >= horizon {
                let x = self.x.clone();
                return Ok(self.finish(horizon, x.clone(), x, StopReason::Horizon));
            }
        }
    }

    /// State at `tau` within the current grid step ending at `b`; updates the
    /// Brownian position but not `self.s`/`self.x`.
    fn advance_to(&mut self, tau: f64, b: f64) -> Result<Vec<f64>> {
        let dt = tau - self.s;
        let nd = self.p.diffusion.noise_dim();
        if nd > 0 {
            if tau >= b {
                self.wtau.copy_from_slice(&self.dw);
            } else {
                let span = b - self.s;
                let f = dt / span;
                let sd = (dt * (b - tau) / span).max(0.0).sqrt();
                for j in 0..nd {
                    let z: f64 = StandardNormal.sample(&mut self.rng.bridge);
                    self.wtau[j] = self.wcur[j] + f * (self.dw[j] - self.wcur[j]) + sd * z;
                }
            }
        }
        let mut out = vec![0.0; self.p.dim];
        self.step_from(self.s, &self.x.clone(), dt, &mut out);
        if nd > 0 {
            self.wcur.copy_from_slice(&self.wtau);
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Simulation { time: self.s, message: "non-finite state".into() });
        }
        Ok(out)
    }

    /// One scheme step of length `dt` from `(s, x)` using the pending
    /// Brownian increment `wtau − wcur`.
    fn step_from(&mut self, s: f64, x: &[f64], dt: f64, out: &mut [f64]) {
        let d = self.p.dim;
        match &self.p.diffusion {
            Diffusion::Zero => {
                if self.rk4 {
                    self.rk4_step(s, x, dt, out);
                } else {
                    self.p.drift.eval(s, x, &mut self.bbuf);
                    for i in 0..d {
                        out[i] = x[i] + self.bbuf[i] * dt;
                    }
                }
            }
            diff => {
                let nd = diff.noise_dim();
                self.p.drift.eval(s, x, &mut self.bbuf);
                diff.eval(s, x, &mut self.sbuf);
                for i in 0..d {
                    let mut v = x[i] + self.bbuf[i] * dt;
                    for j in 0..nd {
                        v += self.sbuf[i * nd + j] * (self.wtau[j] - self.wcur[j]);
                    }
                    out[i] = v;
                }
            }
        }
    }

    fn rk4_step(&mut self, s: f64, x: &[f64], dt: f64, out: &mut [f64]) {
        rk4(&self.p.drift, s, x, dt, out, &mut self.k);
    }

    /// Exit point of the sub-step from the current point to `(s1, x1)`, with
    /// the integrals brought up to the exit time.
    fn exit_check(&mut self, s1: f64, x1: &[f64]) -> Option<(f64, Vec<f64>)> {
        let s0 = self.s;
        let x0 = self.x.clone();
        let dt = s1 - s0;
        let hit = if self.p.domain.classify(x1) == Location::Outside {
            Some(self.locate_crossing(s0, &x0, s1, x1))
        } else if self.bridge && dt > 0.0 {
            self.bridge_crossing(s0, &x0, s1, x1)
        } else {
            None
        };
        if let Some((eta, xe)) = &hit {
            self.accumulate(s0, &x0, *eta, xe);
            if self.cfg.record_skeleton {
                self.skeleton.push((*eta, xe.clone()));
            }
        }
        hit
    }

    fn locate_crossing(&mut self, s0: f64, x0: &[f64], s1: f64, x1: &[f64]) -> (f64, Vec<f64>) {
        let dt = s1 - s0;
        if self.rk4 {
            let tol = self.cfg.step * 1e-6;
            let (mut lo, mut hi) = (0.0, dt);
            let mut y = vec![0.0; self.p.dim];
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                self.rk4_step(s0, x0, mid, &mut y);
                if self.p.domain.classify(&y) == Location::Outside {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            self.rk4_step(s0, x0, hi, &mut y);
            snap_to_boundary(&self.p.domain, &mut y);
            return (s0 + hi, y);
        }
        if let Some((lo, hi)) = self.p.domain.interval_bounds() {
            let bnd = if x1[0] < lo { lo } else { hi };
            let th = if x1[0] != x0[0] { ((bnd - x0[0]) / (x1[0] - x0[0])).clamp(0.0, 1.0) } else { 0.0 };
            return (s0 + th * dt, vec![bnd]);
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let lerp = |th: f64| -> Vec<f64> { x0.iter().zip(x1).map(|(a, b)| a + th * (b - a)).collect() };
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.p.domain.classify(&lerp(mid)) == Location::Outside {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (s0 + lo * dt, lerp(lo))
    }

    fn bridge_crossing(&mut self, s0: f64, x0: &[f64], s1: f64, x1: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (lo, hi) = self.p.domain.interval_bounds()?;
        let dt = s1 - s0;
        self.p.diffusion.eval(s0, x0, &mut self.sbuf);
        let var: f64 = self.sbuf.iter().map(|v| v * v).sum();
        if var <= 0.0 {
            return None;
        }
        let prob = |b: f64| -> f64 {
            if !b.is_finite() {
                return 0.0;
            }
            let d0 = (x0[0] - b).abs();
            let d1 = (x1[0] - b).abs();
            (-2.0 * d0 * d1 / (var * dt)).exp()
        };
        let p_lo = prob(lo);
        let p_hi = prob(hi);
        if p_lo + p_hi <= 0.0 {
            return None;
        }
        let u: f64 = self.rng.monitor.random();
        if u < p_lo {
            Some((s0 + 0.5 * dt, vec![lo]))
        } else if u < p_lo + p_hi {
            Some((s0 + 0.5 * dt, vec![hi]))
        } else {
            None
        }
    }

    /// Adds the path integrals over `[s0, s1]` for the segment `x0 → x1`.
    fn accumulate(&mut self, s0: f64, x0: &[f64], s1: f64, x1: &[f64]) {
        let dt = s1 - s0;
        if dt <= 0.0 {
            return;
        }
        let p = self.p;
        let d0 = self.acc.discount;
        let r_const = p.discount_rate.as_const();
        let dr = match r_const {
            Some(r) => r * dt,
            None => 0.5 * (p.discount_rate.eval(s0, x0) + p.discount_rate.eval(s1, x1)) * dt,
        };
        let l0 = self.acc.intensity;
        let dl = match p.jump_rate.as_const() {
            Some(l) => l * dt,
            None => 0.5 * (p.jump_rate.eval(s0, x0) + p.jump_rate.eval(s1, x1)) * dt,
        };
        let th0 = (-d0).exp();
        let th1 = (-(d0 + dr)).exp();
        let int_theta = match r_const {
            Some(r) if r == 0.0 => th0 * dt,
            Some(r) if dr.abs() > 1e-12 => th0 * (1.0 - (-dr).exp()) / r,
            _ => 0.5 * (th0 + th1) * dt,
        };
        self.acc.discounted_time += int_theta;
        match p.running_cost.as_const() {
            Some(phi) if r_const.is_some() => self.acc.running_cost += phi * int_theta,
            _ => {
                self.acc.running_cost +=
                    0.5 * (th0 * p.running_cost.eval(s0, x0) + th1 * p.running_cost.eval(s1, x1)) * dt
            }
        }
        if let Some(src) = self.source {
            let k0 = src.killing.factor(s0 - self.t0, l0);
            let k1 = src.killing.factor(s1 - self.t0, l0 + dl);
            self.acc.source += 0.5 * (th0 * k0 * (src.field)(s0, x0) + th1 * k1 * (src.field)(s1, x1)) * dt;
        }
        self.acc.discount = d0 + dr;
        self.acc.intensity = l0 + dl;
    }
}

/// Classical fourth-order Runge–Kutta step for x' = b(s, x).
pub(crate) fn rk4(b: &VectorField, s: f64, x: &[f64], dt: f64, out: &mut [f64], k: &mut [Vec<f64>; 5]) {
    let d = x.len();
    let [k1, k2, k3, k4, y] = k;
    b.eval(s, x, k1);
    for i in 0..d {
        y[i] = x[i] + 0.5 * dt * k1[i];
    }
    b.eval(s + 0.5 * dt, y, k2);
    for i in 0..d {
        y[i] = x[i] + 0.5 * dt * k2[i];
    }
    b.eval(s + 0.5 * dt, y, k3);
    for i in 0..d {
        y[i] = x[i] + dt * k3[i];
    }
    b.eval(s + dt, y, k4);
    for i in 0..d {
        out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

fn snap_to_boundary(domain: &crate::model::Domain, y: &mut [f64]) {
    if let Some((lo, hi)) = domain.interval_bounds() {
        if (y[0] - lo).abs() < (y[0] - hi).abs() {
            y[0] = lo;
        } else {
            y[0] = hi;
        }
    }
}
