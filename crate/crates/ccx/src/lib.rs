//! Compensated convex transforms and the average approximation operator on uniform grids.

pub mod cli;
pub mod config;
pub mod delaunay;
pub mod envelope;
pub mod error;
pub mod field;
pub mod hull;
pub mod io;
pub mod metrics;
pub mod prototypes;
pub mod tasks;
pub mod transforms;

pub use error::{CcxError, Result};
