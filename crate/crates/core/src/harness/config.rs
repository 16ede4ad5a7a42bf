//! Experiment configuration as flat `key = value` text.
//!
//! Problem parameters are keyed by family (`ruin.b`, `survival.sigma`, …).
//! Lists are comma separated; `lo..hi:step` expands to an inclusive range.
//! The same keys are accepted one at a time through [`ExperimentConfig::set`],
//! which is how command-line flags override a file.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::examples::{RuinParams, SurvivalParams, DEFAULT_SERIES_STEP};
use crate::harness::stats::DEFAULT_LEVEL;

/// Which experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Ruin iterates by recursive quadrature.
    Ruin,
    /// Survival iterates from the sine series.
    Survival,
    /// Monte Carlo recursion through the general engine.
    Generic,
}

/// Problem family for the generic engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Ruin,
    Survival,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ruin => "ruin",
            Command::Survival => "survival",
            Command::Generic => "generic",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ruin" => Ok(Command::Ruin),
            "survival" => Ok(Command::Survival),
            "generic" => Ok(Command::Generic),
            _ => Err(Error::Config(format!("unknown command {s:?}"))),
        }
    }
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Ruin => "ruin",
            Family::Survival => "survival",
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ruin" => Ok(Family::Ruin),
            "survival" => Ok(Family::Survival),
            _ => Err(Error::Config(format!("unknown family {s:?}"))),
        }
    }
}

/// Inclusive range of iterate levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MRange {
    pub lo: usize,
    pub hi: usize,
}

impl MRange {
    pub fn levels(&self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }
}

impl FromStr for MRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad level {v:?}")));
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
            None => {
                let v = parse(s)?;
                (v, v)
            }
        };
        if lo > hi {
            return Err(Error::Config(format!("empty level range {s:?}")));
        }
        Ok(Self { lo, hi })
    }
}

impl std::fmt::Display for MRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

/// Carrier grid resolution `dt:dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRes {
    pub dt: f64,
    pub dx: f64,
}

impl FromStr for GridRes {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s.split_once(':').ok_or_else(|| Error::Config(format!("grid {s:?} is not dt:dx")))?;
        let g = Self { dt: num(a)?, dx: num(b)? };
        if !(g.dt > 0.0 && g.dx > 0.0) {
            return Err(Error::Config(format!("grid steps in {s:?} must be positive")));
        }
        Ok(g)
    }
}

impl std::fmt::Display for GridRes {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.dt, self.dx)
    }
}

fn num(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Config(format!("bad number {s:?}")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("non-finite number {s:?}")));
    }
    Ok(v)
}

fn flag(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean {s:?}"))),
    }
}

/// Parses `a,b,c` with each item either a number or `lo..hi:step`.
pub fn parse_points(s: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|v| !v.is_empty()) {
        match item.split_once("..") {
            None => out.push(num(item)?),
            Some((lo, rest)) => {
                let (hi, step) = rest.split_once(':').ok_or_else(|| Error::Config(format!("range {item:?} needs :step")))?;
                let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
                if !(step > 0.0) || hi < lo {
                    return Err(Error::Config(format!("bad range {item:?}")));
                }
                let n = ((hi - lo) / step + 1e-9).floor() as usize;
                // Rounded so that 0..1:0.1 yields 0.3 rather than 0.30000000000000004.
                out.extend((0..=n).map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Config("empty point list".into()));
    }
    Ok(out)
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    /// Problem for the generic engine.
    pub family: Family,
    pub ruin: RuinParams,
    pub survival: SurvivalParams,
    pub m: MRange,
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    pub grid: GridRes,
    pub n_paths: u64,
    pub step: f64,
    pub seed: u64,
    /// `None` writes to standard output.
    pub out: Option<PathBuf>,
    pub bounds: bool,
    pub lambda_tilde: Option<f64>,
    pub scan_dx: f64,
    pub level: f64,
    /// Time step of the survival series knots.
    pub series_step: f64,
    /// `None` uses every available core.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    /// Defaults for a command, reproducing the published figure settings.
    pub fn new(command: Command) -> Self {
        let base = Self {
            command,
            family: Family::Survival,
            ruin: RuinParams::default(),
            survival: SurvivalParams::default(),
            m: MRange { lo: 0, hi: 3 },
            times: vec![0.0, 0.5],
            xs: parse_points("0..2:0.05").expect("static range"),
            grid: GridRes { dt: 0.02, dx: 0.02 },
            n_paths: 10_000,
            step: 1e-3,
            seed: 1,
            out: None,
            bounds: true,
            lambda_tilde: None,
            scan_dx: 0.005,
            level: DEFAULT_LEVEL,
            series_step: DEFAULT_SERIES_STEP,
            workers: None,
        };
        match command {
            Command::Ruin => Self { m: MRange { lo: 1, hi: 5 }, xs: parse_points("0..5:0.1").expect("static range"), ..base },
            Command::Survival => base,
            Command::Generic => Self {
                m: MRange { lo: 0, hi: 2 },
                xs: vec![0.4, 0.8, 1.2, 1.6],
                grid: GridRes { dt: 0.05, dx: 0.1 },
                n_paths: 2_000,
                step: 1e-2,
                bounds: false,
                ..base
            },
        }
    }

    /// Parses a config file. `command` must be present unless `default` is given.
    pub fn parse(text: &str, default: Option<Command>) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let command = match pairs.iter().find(|(k, _)| k == "command") {
            Some((_, v)) => v.parse()?,
            None => default.ok_or_else(|| Error::Config("config names no command".into()))?,
        };
        let mut cfg = Self::new(command);
        for (k, v) in pairs.iter().filter(|(k, _)| k != "command") {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Sets one key. Unprefixed problem keys (`b`, `T`, …) go to the family
    /// the command runs.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let fam = match self.command {
            Command::Ruin => Family::Ruin,
            Command::Survival => Family::Survival,
            Command::Generic => self.family,
        };
        let (prefix, name) = match key.split_once('.') {
            Some((p, n)) => (Some(p.parse::<Family>()?), n),
            None => (None, key),
        };
        let target = prefix.unwrap_or(fam);
        let r = &mut self.ruin;
        let s = &mut self.survival;
        match (target, name) {
            (Family::Ruin, "b") => r.b = num(value)?,
            (Family::Ruin, "lambda") => r.lambda = num(value)?,
            (Family::Ruin, "c") => r.c = num(value)?,
            (Family::Ruin, "T") => r.horizon = num(value)?,
            (Family::Survival, "x_l") => s.x_l = num(value)?,
            (Family::Survival, "x_u") => s.x_u = num(value)?,
            (Family::Survival, "b") => s.b = num(value)?,
            (Family::Survival, "sigma") => s.sigma = num(value)?,
            (Family::Survival, "rho") => s.rho = num(value)?,
            (Family::Survival, "T") => s.horizon = num(value)?,
            (Family::Survival, "K") => {
                s.terms = value.parse().map_err(|_| Error::Config(format!("bad K {value:?}")))?
            }
            _ if prefix.is_some() => return Err(Error::Config(format!("unknown key {key:?}"))),
            _ => self.set_general(name, value)?,
        }
        Ok(())
    }

    fn set_general(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "command" => {
                let c: Command = value.parse()?;
                if c != self.command {
                    return Err(Error::Config(format!("command {value:?} conflicts with {}", self.command.name())));
                }
            }
            "family" => self.family = value.parse()?,
            "m" => self.m = value.parse()?,
            "t" => self.times = parse_points(value)?,
            "x" => self.xs = parse_points(value)?,
            "grid" => self.grid = value.parse()?,
            "n_paths" => self.n_paths = value.parse().map_err(|_| Error::Config(format!("bad n_paths {value:?}")))?,
            "step" => self.step = num(value)?,
            "seed" => self.seed = value.parse().map_err(|_| Error::Config(format!("bad seed {value:?}")))?,
            "out" => self.out = if value.is_empty() || value == "-" { None } else { Some(PathBuf::from(value)) },
            "bounds" => self.bounds = flag(value)?,
            "lambda_tilde" => self.lambda_tilde = if value.is_empty() || value == "none" { None } else { Some(num(value)?) },
            "scan_dx" => self.scan_dx = num(value)?,
            "level" => self.level = num(value)?,
            "series_step" => self.series_step = num(value)?,
            "workers" => {
                self.workers = match value {
                    "" | "auto" => None,
                    v => Some(v.parse().map_err(|_| Error::Config(format!("bad workers {v:?}")))?),
                }
            }
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Writes every key; [`ExperimentConfig::parse`] reads it back unchanged.
    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let r = &self.ruin;
        let s = &self.survival;
        let _ = writeln!(o, "command = {}", self.command.name());
        let _ = writeln!(o, "family = {}", self.family.name());
        let _ = writeln!(o, "ruin.b = {}\nruin.lambda = {}\nruin.c = {}\nruin.T = {}", r.b, r.lambda, r.c, r.horizon);
        let _ = writeln!(
            o,
            "survival.x_l = {}\nsurvival.x_u = {}\nsurvival.b = {}\nsurvival.sigma = {}\nsurvival.rho = {}\nsurvival.T = {}\nsurvival.K = {}",
            s.x_l, s.x_u, s.b, s.sigma, s.rho, s.horizon, s.terms
        );
        let _ = writeln!(o, "m = {}", self.m);
        let _ = writeln!(o, "t = {}", join(&self.times));
        let _ = writeln!(o, "x = {}", join(&self.xs));
        let _ = writeln!(o, "grid = {}", self.grid);
        let _ = writeln!(o, "n_paths = {}", self.n_paths);
        let _ = writeln!(o, "step = {}", self.step);
        let _ = writeln!(o, "seed = {}", self.seed);
        let _ = writeln!(o, "out = {}", self.out.as_ref().map_or("-".into(), |p| p.display().to_string()));
        let _ = writeln!(o, "bounds = {}", self.bounds);
        let _ = writeln!(o, "lambda_tilde = {}", self.lambda_tilde.map_or("none".into(), |v| v.to_string()));
        let _ = writeln!(o, "scan_dx = {}", self.scan_dx);
        let _ = writeln!(o, "level = {}", self.level);
        let _ = writeln!(o, "series_step = {}", self.series_step);
        let _ = writeln!(o, "workers = {}", self.workers.map_or("auto".into(), |v| v.to_string()));
        o
    }

    /// Checks everything that can be checked before running.
    pub fn validate(&self) -> Result<()> {
        match (self.command, self.family) {
            (Command::Ruin, _) | (Command::Generic, Family::Ruin) => self.ruin.validate()?,
            _ => self.survival.validate()?,
        }
        let horizon = match (self.command, self.family) {
            (Command::Ruin, _) | (Command::Generic, Family::Ruin) => self.ruin.horizon,
            _ => self.survival.horizon,
        };
        if let Some(t) = self.times.iter().find(|t| !(0.0..=horizon).contains(*t)) {
            return Err(Error::Config(format!("time {t} outside [0, {horizon}]")));
        }
        if self.n_paths < 2 {
            return Err(Error::Config("n_paths must be at least 2".into()));
        }
        if !(self.step > 0.0) || !(self.scan_dx > 0.0) || !(self.series_step > 0.0) {
            return Err(Error::Config("step, scan_dx and series_step must be positive".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("confidence level {} outside (0, 1)", self.level)));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        if let Some(l) = self.lambda_tilde {
            if !(l > 0.0) {
                return Err(Error::Config(format!("λ̃ = {l} must be positive")));
            }
        }
        Ok(())
    }
}
