//! Diversity diagnostics for conditional text generation, plus a small
//! decoding laboratory (temperature sampling, greedy and beam search,
//! label-smoothed training) for reproducing search-induced bias on toy models.

pub mod decoding;
pub mod discriminator;
pub mod error;
pub mod gender;
pub mod metrics;
pub mod report;
pub mod text;

pub use error::{Error, ErrorKind, Result};
