//! Foldover screening designs for second-order models: construction by
//! restricted coordinate exchange and direct Hadamard-based schemes,
//! degrees-of-freedom accounting for the pre-selection variance estimator,
//! expected-confidence-interval scoring, Bayesian-A augmentation, two-stage
//! analysis, and Monte-Carlo power studies.

pub mod error;
pub mod matrix;
pub mod analysis;
pub mod cli;
pub mod construct;
pub mod criteria;
pub mod design;
pub mod dof;
pub mod hadamard;
pub mod io;
pub mod report;
pub mod search;
pub mod sim;
pub mod special;

pub use error::{Error, Result};
pub use matrix::Matrix;
