//! `jd`: run the built-in experiments and write result tables as CSV.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use jd_core::harness::{exit_code, run_experiment, Command, ExperimentConfig};
use jd_core::Error;

#[derive(Parser)]
#[command(name = "jd", version, about = "Jump-decoupled iterates and hard bounds for exit-stopped jump-diffusions")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Finite-time ruin of a pure-jump risk process
    Ruin {
        #[arg(long)]
        b: Option<String>,
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        c: Option<String>,
        #[arg(long = "T")]
        horizon: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Survival in an interval with a time-state dependent jump rate
    Survival {
        #[arg(long = "x-l", allow_hyphen_values = true)]
        x_l: Option<String>,
        #[arg(long = "x-u", allow_hyphen_values = true)]
        x_u: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<String>,
        #[arg(long)]
        sigma: Option<String>,
        #[arg(long)]
        rho: Option<String>,
        #[arg(long = "T")]
        horizon: Option<String>,
        /// Series truncation
        #[arg(long = "K")]
        terms: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo recursion through the general engine
    Generic {
        /// Problem family: ruin or survival
        #[arg(long)]
        family: Option<String>,
        /// Extra problem keys, e.g. `--set ruin.c=-2`
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long = "n-paths")]
    n_paths: Option<String>,
    /// Euler step
    #[arg(long)]
    step: Option<String>,
    /// Iterate levels, `lo..hi` or a single level
    #[arg(long)]
    m: Option<String>,
    /// Evaluation times, e.g. `0,0.5`
    #[arg(long)]
    t: Option<String>,
    /// Evaluation points, e.g. `0..5:0.1`
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// Carrier grid resolution `dt:dx`
    #[arg(long)]
    grid: Option<String>,
    /// Report brackets: true or false
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    bounds: Option<String>,
    #[arg(long = "lambda-tilde")]
    lambda_tilde: Option<String>,
    /// Scan resolution for the bound envelopes
    #[arg(long = "scan-dx")]
    scan_dx: Option<String>,
    /// Confidence level of reported intervals
    #[arg(long)]
    level: Option<String>,
    /// Output CSV; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "JD_WORKERS")]
    workers: Option<String>,
}

impl Common {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let mut put = |k: &'static str, o: &Option<String>| {
            if let Some(s) = o {
                v.push((k, s.clone()));
            }
        };
        put("seed", &self.seed);
        put("n_paths", &self.n_paths);
        put("step", &self.step);
        put("m", &self.m);
        put("t", &self.t);
        put("x", &self.x);
        put("grid", &self.grid);
        put("bounds", &self.bounds);
        put("lambda_tilde", &self.lambda_tilde);
        put("scan_dx", &self.scan_dx);
        put("level", &self.level);
        put("workers", &self.workers);
        if let Some(p) = &self.out {
            v.push(("out", p.display().to_string()));
        }
        v
    }
}

fn build(cmd: Cmd) -> anyhow::Result<ExperimentConfig> {
    let (command, common, mut pairs): (Command, Common, Vec<(String, String)>) = match cmd {
        Cmd::Ruin { b, lambda, c, horizon, common } => {
            let keys = [("b", b), ("lambda", lambda), ("c", c), ("T", horizon)];
            (Command::Ruin, common, keys.into_iter().filter_map(|(k, v)| v.map(|v| (k.into(), v))).collect())
        }
        Cmd::Survival { x_l, x_u, b, sigma, rho, horizon, terms, common } => {
            let keys = [("x_l", x_l), ("x_u", x_u), ("b", b), ("sigma", sigma), ("rho", rho), ("T", horizon), ("K", terms)];
            (Command::Survival, common, keys.into_iter().filter_map(|(k, v)| v.map(|v| (k.into(), v))).collect())
        }
        Cmd::Generic { family, set, common } => {
            let mut pairs: Vec<(String, String)> = family.map(|f| ("family".to_string(), f)).into_iter().collect();
            for kv in set {
                let (k, v) = kv.split_once('=').with_context(|| format!("--set {kv:?} is not KEY=VALUE"))?;
                pairs.push((k.trim().into(), v.trim().into()));
            }
            (Command::Generic, common, pairs)
        }
    };
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(Error::Io)?;
            ExperimentConfig::parse(&text, Some(command))?
        }
        None => ExperimentConfig::new(command),
    };
    if cfg.command != command {
        return Err(Error::Config(format!("config is for {}, not {}", cfg.command.name(), command.name())).into());
    }
    pairs.extend(common.pairs().into_iter().map(|(k, v)| (k.to_string(), v)));
    for (k, v) in &pairs {
        cfg.set(k, v)?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build(cli.command).and_then(|cfg| run_experiment(&cfg).map_err(anyhow::Error::from));
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jd: {e:#}");
            let code = e.downcast_ref::<Error>().map_or(2, exit_code);
            ExitCode::from(code as u8)
        }
    }
}
