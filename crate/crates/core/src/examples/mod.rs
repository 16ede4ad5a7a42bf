//! The two worked problems with their closed forms and series solutions.

pub mod ruin;
pub mod survival;

pub use ruin::{ruin_closed_form, ruin_iterate, RuinIterates, RuinParams};
pub use survival::{survival_series, SurvivalParams, SurvivalQuantity, SurvivalSeries, SurvivalSolver, DEFAULT_SERIES_STEP};
