//! Numerics substrate and experiment plumbing.

pub mod config;
pub mod experiment;
pub mod quad;
pub mod rng;
pub mod stats;

pub use quad::{integrate_1d, GaussLegendre, QuadResult};
pub use rng::{RngStreamSpec, StreamTag};
pub use stats::{mc_aggregate, McEstimate};
pub use config::{Command, ExperimentConfig, Family, GridRes, MRange};
pub use experiment::{compute_rows, exit_code, run_experiment, write_rows, Row, HEADER};
