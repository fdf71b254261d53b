#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod band;
pub mod cs;
pub mod error;
pub mod landscape;
pub mod measure;
pub mod mixture;
pub mod numeric;
pub mod parisi;
pub mod rsb;
pub mod sim;

pub use cs::{minimize_q, Interval, ParisiSolution, SolverOptions};
pub use error::{Error, Result};
pub use landscape::{LandscapeOptions, LandscapeReport};
pub use measure::{project_to_cone, GridMeasure};
pub use mixture::Mixture;
pub use parisi::{DualPoint, OptimalityResiduals};
pub use rsb::{Phase, RsbClassification};
pub use sim::{SimConfig, SimReport};
