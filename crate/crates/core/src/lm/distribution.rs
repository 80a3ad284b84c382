use serde::{Deserialize, Serialize};

use super::TokenId;
use crate::{Error, Result, Scalar};

/// A model's next-token distribution, sorted by probability descending with
/// ties broken by ascending token id. Rank `r` is position `r - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NextTokenDistribution<T> {
    entries: Vec<(TokenId, T)>,
}

impl<T: Scalar> NextTokenDistribution<T> {
    /// Sorts a dense probability vector indexed by token id.
    pub fn from_probs(probs: &[T]) -> Self {
        let mut entries: Vec<(TokenId, T)> = probs
            .iter()
            .enumerate()
            .map(|(i, &p)| (i as TokenId, p))
            .collect();
        entries.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
        NextTokenDistribution { entries }
    }

    /// Wraps entries that are already in rank order.
    pub fn from_sorted(entries: Vec<(TokenId, T)>) -> Result<Self> {
        let ordered = entries.windows(2).all(|w| {
            w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0)
        });
        if !ordered {
            return Err(Error::Invalid(
                "distribution entries are not in rank order".into(),
            ));
        }
        Ok(NextTokenDistribution { entries })
    }

    pub(crate) fn from_sorted_unchecked(entries: Vec<(TokenId, T)>) -> Self {
        NextTokenDistribution { entries }
    }

    pub fn entries(&self) -> &[(TokenId, T)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn probs(&self) -> impl Iterator<Item = T> + '_ {
        self.entries.iter().map(|e| e.1)
    }

    pub fn total(&self) -> T {
        self.probs().sum()
    }

    /// Token at 1-based rank `rank`.
    pub fn token_at(&self, rank: usize) -> TokenId {
        self.entries[rank - 1].0
    }

    /// Locates `token`, accumulating the inclusive prefix sum in rank order.
    pub fn record_for(&self, token: TokenId) -> Option<TokenRecord<T>> {
        let mut acc = T::zero();
        for (i, &(id, p)) in self.entries.iter().enumerate() {
            acc = acc + p;
            if id == token {
                return Some(TokenRecord::new(token, i + 1, p, acc));
            }
        }
        None
    }
}

/// Scoring facts for one realized token.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenRecord<T> {
    pub token_id: TokenId,
    /// 1-based position in the sorted distribution.
    pub rank: usize,
    pub prob: T,
    pub logprob: T,
    /// Inclusive of `prob`.
    pub cum_prob: T,
}

impl<T: Scalar> TokenRecord<T> {
    pub fn new(token_id: TokenId, rank: usize, prob: T, cum_prob: T) -> Self {
        TokenRecord {
            token_id,
            rank,
            prob,
            logprob: prob.ln(),
            cum_prob,
        }
    }

    /// Cumulative mass strictly ahead of this token.
    pub fn mass_before(&self) -> T {
        self.cum_prob - self.prob
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentScore<T> {
    pub doc_id: String,
    pub records: Vec<TokenRecord<T>>,
}

impl<T: Scalar> DocumentScore<T> {
    pub fn new(doc_id: impl Into<String>, records: Vec<TokenRecord<T>>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::NothingToScore);
        }
        Ok(DocumentScore {
            doc_id: doc_id.into(),
            records,
        })
    }

    /// Number of scored tokens.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn token_ids(&self) -> Vec<TokenId> {
        self.records.iter().map(|r| r.token_id).collect()
    }
}

/// Anything that yields a sorted next-token distribution for a context.
///
/// `score_token` may be overridden with a faster route, but it must agree
/// exactly with locating the token in `next_distribution`.
pub trait LanguageModel<T: Scalar>: Sync {
    fn vocab_size(&self) -> usize;

    fn next_distribution(&self, context: &[TokenId]) -> NextTokenDistribution<T>;

    fn score_token(&self, context: &[TokenId], token: TokenId) -> TokenRecord<T> {
        self.next_distribution(context)
            .record_for(token)
            .expect("distribution has full vocabulary support")
    }
}

/// Scores every token of `tokens`, each conditioned on all tokens before it.
pub fn score_document<T, M>(model: &M, doc_id: &str, tokens: &[TokenId]) -> Result<DocumentScore<T>>
where
    T: Scalar,
    M: LanguageModel<T> + ?Sized,
{
    score_span(model, doc_id, tokens, 0)
}

/// Like [`score_document`] but only emits records for `tokens[start..]`;
/// earlier tokens still serve as context.
pub fn score_span<T, M>(
    model: &M,
    doc_id: &str,
    tokens: &[TokenId],
    start: usize,
) -> Result<DocumentScore<T>>
where
    T: Scalar,
    M: LanguageModel<T> + ?Sized,
{
    if start >= tokens.len() {
        return Err(Error::NothingToScore);
    }
    let records = (start..tokens.len())
        .map(|i| model.score_token(&tokens[..i], tokens[i]))
        .collect();
    DocumentScore::new(doc_id, records)
}
