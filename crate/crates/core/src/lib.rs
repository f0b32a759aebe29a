//! Discovery of lagged causal networks from nonstationary multivariate time
//! series.
//!
//! The pipeline is: load or [`synth::generate`] a [`TimeSeriesPanel`], run
//! [`hce::discover`] to recover each variable's lagged parents, and score the
//! resulting [`Ucn`] with the [`eval`] module.

pub mod entropy;
pub mod error;
pub mod eval;
pub mod graph;
pub mod hce;
pub mod synth;
pub mod timeseries;

pub use entropy::EstimatorConfig;
pub use error::{Error, Result};
pub use graph::{Edge, Ucn};
pub use hce::{discover, HceConfig, ParentSet};
pub use synth::StructuralSpec;
pub use timeseries::{build_design, standardize, LaggedVar, TimeSeriesPanel};
