//! Distribution separation and real-vs-synthetic detectors.

mod detector;
mod ks;
mod logistic;
mod separation;

pub use detector::{
    f1_score, train_detector, DetectorConfig, DetectorModel, DetectorReport, FeatureSet,
};
pub use ks::ks_statistic;
pub use logistic::{fit_logistic, LogisticFit, Standardizer};
pub use separation::{histograms, separation_table, Histogram, SeparationReport};
