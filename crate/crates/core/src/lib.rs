pub mod analysis;
pub mod cli;
pub mod correlations;
pub mod csp;
pub mod distributions;
pub mod embeddings;
pub mod error;
pub mod estimate;
pub mod fixtures;
pub mod indexing;
pub mod io;
pub mod norms;
pub mod patterns;
pub mod rational;
pub mod rng;
pub mod selftest;

pub use error::{Error, Result};
