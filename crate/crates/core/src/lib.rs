//! Recursive jump-decoupling approximations for exit-stopped functionals of
//! jump-diffusions with time-state dependent jump intensity.
//!
//! The crate computes the iterates `w_m`, `v_m` and their thinned variants,
//! the de-jumped Picard step, hard upper/lower bounding functions, and carries
//! two worked examples (a pure-jump ruin problem and a survival problem with a
//! state-dependent rate) as oracles.

pub mod bounds;
pub mod error;
pub mod examples;
pub mod harness;
pub mod model;
pub mod paths;
pub mod recursion;
pub mod thinning;

pub use error::{Error, Result};
