//! Temperature, top-k/top-p nucleus selection, burst sampling and
//! autoregressive generation.

mod bins;
mod burst;
mod generate;
mod nucleus;

pub use bins::{learn_bin_distribution, BinDistribution, BinLayout, ThetaFile};
pub use burst::{burst_modify, ModifiedDistribution};
pub use generate::{generate, Strategy};
pub use nucleus::{apply_temperature, nucleus_set, nucleus_size, sample_token, NucleusSpec};
