use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    burstiness, gltr_fractions, log_likelihood, log_rank_score, rank_score, recoverability,
    self_bleu, Measure, SelfBleuConfig,
};
use crate::lm::DocumentScore;
use crate::sampling::{BinLayout, NucleusSpec};
use crate::{Result, Scalar};

/// What every metric vector in one table shares.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricContext {
    pub layout: BinLayout,
    pub recoverability: Vec<NucleusSpec>,
}

/// All per-document metrics for one scored text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector<T> {
    pub doc_id: String,
    pub source: String,
    pub log_likelihood: T,
    pub perplexity: T,
    pub rank: T,
    pub log_rank: T,
    pub k_burstiness: T,
    pub p_burstiness: T,
    pub top_p_burstiness: T,
    pub self_bleu: Option<T>,
    pub recoverability: Vec<(NucleusSpec, T)>,
    pub gltr: Vec<T>,
}

impl<T: Scalar> MetricVector<T> {
    /// Named values in table column order.
    pub fn columns(&self) -> Vec<(String, Option<T>)> {
        let mut cols = vec![
            ("log_likelihood".to_string(), Some(self.log_likelihood)),
            ("perplexity".to_string(), Some(self.perplexity)),
            ("rank".to_string(), Some(self.rank)),
            ("log_rank".to_string(), Some(self.log_rank)),
            ("k_burstiness".to_string(), Some(self.k_burstiness)),
            ("p_burstiness".to_string(), Some(self.p_burstiness)),
            ("top_p_burstiness".to_string(), Some(self.top_p_burstiness)),
            ("self_bleu".to_string(), self.self_bleu),
        ];
        cols.extend(
            self.recoverability
                .iter()
                .map(|(spec, v)| (recov_column(spec), Some(*v))),
        );
        cols.extend(
            self.gltr
                .iter()
                .enumerate()
                .map(|(i, v)| (format!("gltr_bin{i}"), Some(*v))),
        );
        cols
    }
}

pub(crate) fn recov_column(spec: &NucleusSpec) -> String {
    format!("recov_{spec}")
}

/// Assembles every metric for `doc`. `self_bleu` is computed against the
/// document's collection beforehand, or left out.
pub fn compute_metric_vector<T: Scalar>(
    doc: &DocumentScore<T>,
    source: &str,
    context: &MetricContext,
    self_bleu: Option<T>,
) -> Result<MetricVector<T>> {
    let log_likelihood = log_likelihood(doc)?;
    Ok(MetricVector {
        doc_id: doc.doc_id.clone(),
        source: source.to_string(),
        log_likelihood,
        perplexity: (-log_likelihood).exp(),
        rank: rank_score(doc),
        log_rank: log_rank_score(doc),
        k_burstiness: burstiness(doc, Measure::K)?,
        p_burstiness: burstiness(doc, Measure::P)?,
        top_p_burstiness: burstiness(doc, Measure::TopP)?,
        self_bleu,
        recoverability: context
            .recoverability
            .iter()
            .map(|&s| (s, recoverability(doc, s)))
            .collect(),
        gltr: gltr_fractions(doc, &context.layout),
    })
}

/// Metric vectors for a whole collection, with self-BLEU over the scored
/// token sequences when `bleu` is given.
pub fn compute_metric_vectors<T: Scalar>(
    docs: &[DocumentScore<T>],
    source: &str,
    context: &MetricContext,
    bleu: Option<&SelfBleuConfig>,
) -> Result<Vec<MetricVector<T>>> {
    let bleu_scores: Vec<Option<T>> = match bleu {
        Some(cfg) if docs.len() >= 2 => {
            let seqs: Vec<_> = docs.iter().map(|d| d.token_ids()).collect();
            self_bleu(&seqs, cfg)?.into_iter().map(Some).collect()
        }
        _ => vec![None; docs.len()],
    };
    docs.par_iter()
        .zip(bleu_scores.into_par_iter())
        .map(|(d, b)| compute_metric_vector(d, source, context, b))
        .collect()
}
