//! Spectral toolkit for fractional powers of second-order operators.

pub mod cli;
pub mod error;
pub mod extension;
pub mod fracops;
pub mod harnack;
pub mod spectra;
pub mod transfer;
pub mod specfun;

pub use error::{Error, Result};
