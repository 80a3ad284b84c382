//! Per-document metrics over scored tokens.
//!
//! All logarithms are natural. Rank and log rank are per-token means.

mod bleu;
mod table;
mod vector;

pub use bleu::{bleu, self_bleu, SelfBleuConfig};
pub use table::{MetricRow, MetricTable};
pub use vector::{compute_metric_vector, compute_metric_vectors, MetricContext, MetricVector};

use crate::lm::DocumentScore;
use crate::sampling::{BinLayout, NucleusSpec};
use crate::{Error, Result, Scalar};

/// Fraction of tokens that `spec` would have allowed at their step.
pub fn recoverability<T: Scalar>(doc: &DocumentScore<T>, spec: NucleusSpec) -> T {
    if spec == NucleusSpec::Full {
        log::debug!("recoverability under the full nucleus is identically 1");
    }
    let hits = doc
        .records
        .iter()
        .filter(|r| spec.admits(r.rank, r.prob, r.cum_prob))
        .count();
    T::of_usize(hits) / T::of_usize(doc.len())
}

/// Mean natural-log probability per token.
pub fn log_likelihood<T: Scalar>(doc: &DocumentScore<T>) -> Result<T> {
    let mut sum = T::zero();
    for (i, r) in doc.records.iter().enumerate() {
        if !(r.prob > T::zero()) {
            return Err(Error::ZeroProbability(i));
        }
        sum = sum + r.logprob;
    }
    Ok(sum / T::of_usize(doc.len()))
}

pub fn perplexity<T: Scalar>(doc: &DocumentScore<T>) -> Result<T> {
    Ok((-log_likelihood(doc)?).exp())
}

/// Mean 1-based rank.
pub fn rank_score<T: Scalar>(doc: &DocumentScore<T>) -> T {
    let sum: T = doc.records.iter().map(|r| T::of_usize(r.rank)).sum();
    sum / T::of_usize(doc.len())
}

/// Mean of `ln(rank)`.
pub fn log_rank_score<T: Scalar>(doc: &DocumentScore<T>) -> T {
    let sum: T = doc.records.iter().map(|r| T::of_usize(r.rank).ln()).sum();
    sum / T::of_usize(doc.len())
}

/// Fraction of tokens whose rank falls in each bin of `layout`.
pub fn gltr_fractions<T: Scalar>(doc: &DocumentScore<T>, layout: &BinLayout) -> Vec<T> {
    let mut counts = vec![0usize; layout.n_bins()];
    for r in &doc.records {
        counts[layout.bin_of(r.rank)] += 1;
    }
    let n = T::of_usize(doc.len());
    counts.into_iter().map(|c| T::of_usize(c) / n).collect()
}

/// Per-token series whose variability is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    /// rank
    K,
    /// probability
    P,
    /// cumulative probability
    TopP,
}

/// Coefficient of variation (population standard deviation over mean) of
/// the chosen per-token series.
pub fn burstiness<T: Scalar>(doc: &DocumentScore<T>, measure: Measure) -> Result<T> {
    let series: Vec<T> = doc
        .records
        .iter()
        .map(|r| match measure {
            Measure::K => T::of_usize(r.rank),
            Measure::P => r.prob,
            Measure::TopP => r.cum_prob,
        })
        .collect();
    coefficient_of_variation(&series)
}

pub(crate) fn coefficient_of_variation<T: Scalar>(series: &[T]) -> Result<T> {
    if series.is_empty() {
        return Err(Error::NothingToScore);
    }
    let n = T::of_usize(series.len());
    let mean = series.iter().copied().sum::<T>() / n;
    if !(mean > T::zero()) {
        return Err(Error::UndefinedCv);
    }
    let var = series.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
    Ok(var.sqrt() / mean)
}
