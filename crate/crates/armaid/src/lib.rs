//! ARMA order identification two ways: a from-scratch 1-D convolutional
//! residual network trained on simulated series, and classical AIC/BIC
//! likelihood selection, with a benchmarking harness comparing the two.

pub mod arma;
pub mod baseline;
pub mod cli;
pub mod error;
pub mod eval;
pub mod identify;
pub mod io;
pub mod net;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
