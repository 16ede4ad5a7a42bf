//! Iterate sequences and their representation identities.

pub mod dejump;
pub mod deterministic;
pub mod estimators;
pub mod grid;

pub use estimators::{
    advance_two_routes, estimate_u, estimate_vm, estimate_w0, estimate_wm_direct, estimate_wm_relay, evaluate_g_h,
    settle, McSettings, TwoRoute,
};
pub use dejump::{dejump_step, w0_grid, EstimatedGrid};
pub use deterministic::{deterministic_solve, DeterministicSolver};
pub use grid::{Axis, GridFunction, GridSpec, OutOfWindow};
