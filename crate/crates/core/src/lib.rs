//! Trajectory optimization under Signal Temporal Logic with an exact smooth
//! reformulation of the robustness max/min operators.

pub mod app;
pub mod checks;
pub mod error;
pub mod expr;
pub mod formula;
pub mod nlp;
pub mod reform;
pub mod scenario;
pub mod smooth;
pub mod trajectory;
pub mod tree;

pub use error::{Error, Result};
