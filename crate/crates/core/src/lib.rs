//! Convergence analysis for basic hypergeometric series `r phi s` whose base
//! `q = exp(2 pi i theta)` lies on the unit circle.

pub mod cli;
pub mod diophant;
pub mod ergodic;
pub mod error;
pub mod exactnum;
pub mod liouville;
pub mod qpoch;
pub mod qseries;
pub mod report;

pub use error::{Error, Result};
