//! Factor score predictors for the common factor model and how well each one
//! reproduces the off-diagonal observed covariances.

pub mod assign;
pub mod cli;
pub mod config;
pub mod efa;
pub mod error;
pub mod io;
pub mod matops;
pub mod metrics;
pub mod model;
pub mod predictors;
pub mod sim;
pub mod svg;
pub mod verify;

pub use error::{Error, Result};
