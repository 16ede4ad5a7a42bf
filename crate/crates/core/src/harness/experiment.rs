//! Runs a configured experiment and writes the result table
//! `t,x,m,estimate,stderr,lower,upper,valid`.

use std::fs::File;
use std::io::{BufWriter, Write};

use rayon::prelude::*;

use crate::bounds::{compute_m_extrema, compute_n_extrema, hard_bounds, xi_grid, BoundPair, NInputs};
use crate::error::{Error, Result};
use crate::examples::{ruin_iterate, SurvivalSeries, SurvivalSolver};
use crate::harness::config::{Command, ExperimentConfig, Family};
use crate::harness::rng::RngStreamSpec;
use crate::harness::stats::McEstimate;
use crate::model::Problem;
use crate::recursion::{
    dejump_step, estimate_w0, estimate_wm_relay, w0_grid, EstimatedGrid, GridFunction, GridSpec, McSettings,
    OutOfWindow,
};
use crate::thinning::{dejump_step_thinned, estimate_thinned_relay};

/// Header of the result table.
pub const HEADER: &str = "t,x,m,estimate,stderr,lower,upper,valid";

const QUAD_TOL: f64 = 1e-10;

/// One output row; `bracket` is `None` when bounds were not requested.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub t: f64,
    pub x: f64,
    pub m: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub bracket: Option<BoundPair>,
}

/// Process exit code for an error: 2 for invalid input, 4 for output
/// failures, 3 for numerical faults.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) | Error::Validation(_) => 2,
        Error::Io(_) | Error::Csv(_) => 4,
        _ => 3,
    }
}

/// Validates, computes and writes the table to `cfg.out` (standard output
/// when unset). Returns the number of rows.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<usize> {
    cfg.validate()?;
    // Open first so an unwritable path fails before the computation.
    let sink: Box<dyn Write> = match &cfg.out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let rows = compute_rows(cfg)?;
    write_rows(BufWriter::new(sink), &rows)?;
    Ok(rows.len())
}

/// The rows of an experiment, on `cfg.workers` threads.
pub fn compute_rows(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    cfg.validate()?;
    let run = || match cfg.command {
        Command::Ruin => ruin_rows(cfg),
        Command::Survival => survival_rows(cfg),
        Command::Generic => generic_rows(cfg),
    };
    match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(run),
        None => run(),
    }
}

fn fmt_f(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

/// Writes the header and rows with LF line endings.
pub fn write_rows<W: Write>(mut w: W, rows: &[Row]) -> Result<()> {
    writeln!(w, "{HEADER}")?;
    for r in rows {
        let (lo, hi, valid) = match &r.bracket {
            None => (String::new(), String::new(), String::new()),
            Some(b) if b.valid => (fmt_f(b.lower), fmt_f(b.upper), "true".into()),
            Some(_) => (String::new(), String::new(), "false".into()),
        };
        writeln!(w, "{},{},{},{},{},{lo},{hi},{valid}", r.t, r.x, r.m, fmt_f(r.estimate), fmt_f(r.stderr))?;
    }
    w.flush()?;
    Ok(())
}

fn points(cfg: &ExperimentConfig) -> Vec<(usize, f64, f64)> {
    cfg.m
        .levels()
        .flat_map(|m| cfg.times.iter().flat_map(move |&t| cfg.xs.iter().map(move |&x| (m, t, x))))
        .collect()
}

fn steps(lo: f64, hi: f64, h: f64) -> usize {
    (((hi - lo) / h).ceil() as usize).max(1) + 1
}

fn ruin_rows(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let p = cfg.ruin;
    if cfg.xs.iter().any(|&x| x < 0.0) {
        return Err(Error::Config("ruin points need x ≥ 0".into()));
    }
    let m_max = cfg.m.hi;
    // w_m vanishes beyond m|c|, so the window only has to reach that far.
    let reach = cfg.xs.iter().fold(m_max as f64 * -p.c, |a, &b| a.max(b));
    let nx = steps(0.0, reach, cfg.grid.dx);
    let x_hi = (nx - 1) as f64 * cfg.grid.dx;
    let grid = GridSpec::uniform_1d(0.0, p.horizon, steps(0.0, p.horizon, cfg.grid.dt), 0.0, x_hi, nx)?;
    let it = ruin_iterate(&p, m_max, &grid, QUAD_TOL)?;
    points(cfg)
        .into_iter()
        .map(|(m, t, x)| {
            let b = it.bounds(m, t, x)?;
            Ok(Row { t, x, m, estimate: b.w_m, stderr: 0.0, bracket: cfg.bounds.then_some(b) })
        })
        .collect()
}

fn survival_scan(cfg: &ExperimentConfig) -> Result<GridSpec> {
    let s = &cfg.survival;
    GridSpec::uniform_1d(0.0, s.horizon, steps(0.0, s.horizon, cfg.scan_dx), s.x_l, s.x_u, steps(s.x_l, s.x_u, cfg.scan_dx))
}

fn survival_rows(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let s = cfg.survival;
    if let Some(x) = cfg.xs.iter().find(|&&x| !(s.x_l..=s.x_u).contains(&x)) {
        return Err(Error::Config(format!("survival point x = {x} outside [{}, {}]", s.x_l, s.x_u)));
    }
    let bound = cfg.lambda_tilde.unwrap_or_else(|| s.rate_bound());
    let solver = SurvivalSolver::with_rate_bound(s, bound, cfg.m.hi, cfg.series_step)?;
    let pts = points(cfg);
    if !cfg.bounds {
        return pts
            .into_iter()
            .map(|(m, t, x)| Ok(Row { t, x, m, estimate: solver.w_tilde(m, t, x)?, stderr: 0.0, bracket: None }))
            .collect();
    }
    let scan = survival_scan(cfg)?;
    let mx = solver.m_extrema(&scan)?;
    let mut rows = Vec::with_capacity(pts.len());
    for m in cfg.m.levels() {
        let at: Vec<(f64, f64)> = pts.iter().filter(|p| p.0 == m).map(|p| (p.1, p.2)).collect();
        for b in solver.bounds(m, &mx, &scan, &at)? {
            rows.push(Row { t: b.t, x: b.x[0], m, estimate: b.w_m, stderr: 0.0, bracket: Some(b) });
        }
    }
    Ok(rows)
}

fn generic_problem(cfg: &ExperimentConfig) -> Result<(Problem, f64, f64)> {
    let (p, lo, hi) = match cfg.family {
        Family::Ruin => {
            let r = cfg.ruin;
            let reach = cfg.xs.iter().fold(cfg.m.hi as f64 * -r.c, |a, &b| a.max(b));
            (r.problem(), 0.0, reach)
        }
        Family::Survival => {
            let s = cfg.survival;
            (SurvivalSeries::new(s)?.problem(), s.x_l, s.x_u)
        }
    };
    let p = match cfg.lambda_tilde {
        Some(l) => p.with_rate_bound(Some(l)),
        None => p,
    };
    Ok((p, lo, hi))
}

fn generic_rows(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let (p, lo, hi) = generic_problem(cfg)?;
    if let Some(x) = cfg.xs.iter().find(|&&x| !p.domain.in_closure(&[x])) {
        return Err(Error::Config(format!("point x = {x} outside the closed domain")));
    }
    let thinned = cfg.lambda_tilde.is_some();
    let s = McSettings::new(cfg.n_paths, cfg.step).level(cfg.level);
    let rng = RngStreamSpec::new(cfg.seed);
    let nx = steps(lo, hi, cfg.grid.dx);
    let grid = GridSpec::uniform_1d(0.0, p.horizon, steps(0.0, p.horizon, cfg.grid.dt), lo, hi, nx)?;

    // Carriers w_0, …, w_top on the grid; bounds need the top level too.
    let top = if cfg.bounds { cfg.m.hi } else { cfg.m.hi.saturating_sub(1) };
    let carriers_rng = rng.child(0);
    let mut carriers: Vec<EstimatedGrid> = Vec::with_capacity(top + 1);
    carriers.push(match &p.reference_w0 {
        Some(f) => {
            let values = GridFunction::tabulate(grid.clone(), OutOfWindow::Clamp, |t, x| f(t, x));
            let stderr = GridFunction::zeros(grid.clone());
            EstimatedGrid { values, stderr }
        }
        None => w0_grid(&p, &grid, &s, &carriers_rng.child(0))?,
    });
    for m in 1..=top {
        let prev = Some(&carriers[m - 1].values);
        let r = carriers_rng.child(m as u64);
        let next = if thinned { dejump_step_thinned(&p, prev, &grid, &s, &r)? } else { dejump_step(&p, prev, &grid, &s, &r)? };
        carriers.push(next);
    }

    let pts = points(cfg);
    let point_rng = rng.child(1);
    let est: Result<Vec<McEstimate>> = pts
        .par_iter()
        .enumerate()
        .map(|(k, &(m, t, x))| {
            let r = point_rng.child(k as u64);
            match m {
                0 => estimate_w0(&p, t, &[x], &s, &r),
                _ if thinned => estimate_thinned_relay(&p, m, 1, &carriers[m - 1].values, t, &[x], &s, &r),
                _ => estimate_wm_relay(&p, m, 1, &carriers[m - 1].values, t, &[x], &s, &r),
            }
        })
        .collect();
    let est = est?;

    let mut brackets: Vec<Option<BoundPair>> = vec![None; pts.len()];
    if cfg.bounds {
        let scan = GridSpec::uniform_1d(
            0.0,
            p.horizon,
            steps(0.0, p.horizon, cfg.scan_dx),
            grid.space[0].lo,
            grid.space[0].hi,
            steps(grid.space[0].lo, grid.space[0].hi, cfg.scan_dx),
        )?;
        let xi = xi_grid(&p, &grid, &s, &rng.child(2))?.values;
        let mx = compute_m_extrema(&p, &xi, &scan, QUAD_TOL)?;
        for m in cfg.m.levels() {
            let inp = NInputs {
                m,
                w_m: &carriers[m].values,
                w_prev: m.checked_sub(1).map(|k| &carriers[k].values as &dyn crate::model::ValueField),
                rate_bound: cfg.lambda_tilde,
            };
            let (np, _) = compute_n_extrema(&p, inp, &scan, QUAD_TOL)?;
            for (k, &(mk, t, x)) in pts.iter().enumerate() {
                if mk == m {
                    brackets[k] = Some(hard_bounds(m, t, &[x], est[k].mean, xi.eval(t, &[x]), &mx, &np));
                }
            }
        }
    }
    Ok(pts
        .into_iter()
        .zip(est)
        .zip(brackets)
        .map(|(((m, t, x), e), bracket)| Row { t, x, m, estimate: e.mean, stderr: e.stderr, bracket })
        .collect())
}
