//! Burst sampling, recoverability, and human-vs-synthetic text analysis
//! over a pluggable next-token distribution provider.
//!
//! The numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`, which is what the command
//! line tool uses.

mod error;
pub mod cli;
pub mod corpus;
pub mod lm;
pub mod metrics;
pub mod sampling;
pub mod stats;
pub mod rng;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Distribution = lm::NextTokenDistribution<f64>;
pub type Record = lm::TokenRecord<f64>;
pub type DocScore = lm::DocumentScore<f64>;
