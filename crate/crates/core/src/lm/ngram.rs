use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LanguageModel, NextTokenDistribution, TokenId, TokenRecord, Vocabulary, START_MARKER};
use crate::{Error, Result, Scalar};

pub const MODEL_FORMAT: &str = "burstlab-ngram";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NgramConfig {
    pub order: usize,
    pub alpha: f64,
    pub vocab_cap: usize,
    pub min_count: u64,
}

impl Default for NgramConfig {
    fn default() -> Self {
        NgramConfig {
            order: 2,
            alpha: 0.01,
            vocab_cap: 5000,
            min_count: 1,
        }
    }
}

/// Continuation counts after one context, sorted by count descending then
/// token id ascending. That is exactly the rank order of the seen tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Continuations {
    total: u64,
    counts: Vec<(TokenId, u64)>,
}

/// Add-α smoothed n-gram model:
/// `P(v | ctx) = (c(ctx, v) + α) / (c(ctx) + α·V)`.
///
/// Unseen contexts give the uniform distribution. Immutable once trained.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    order: usize,
    alpha: f64,
    vocab: Vocabulary,
    contexts: BTreeMap<Vec<TokenId>, Continuations>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    order: usize,
    alpha: f64,
    unk_id: TokenId,
    tokens: Vec<String>,
    contexts: Vec<ContextEntry>,
}

#[derive(Serialize, Deserialize)]
struct ContextEntry {
    context: Vec<TokenId>,
    counts: Vec<(TokenId, u64)>,
}

/// Trains on whitespace-tokenized documents. Tokens outside the capped
/// vocabulary become `<unk>`.
pub fn train_ngram<S: AsRef<str>>(corpus: &[Vec<S>], config: &NgramConfig) -> Result<NgramModel> {
    if config.order < 1 {
        return Err(Error::InvalidOrder(config.order));
    }
    if !(config.alpha > 0.0) || !config.alpha.is_finite() {
        return Err(Error::InvalidAlpha(config.alpha));
    }
    if corpus.iter().all(|d| d.is_empty()) {
        return Err(Error::EmptyCorpus);
    }
    let vocab = Vocabulary::build(
        corpus.iter().map(|d| d.iter().map(|s| s.as_ref())),
        config.vocab_cap,
        config.min_count,
    )?;

    let width = config.order - 1;
    let mut raw: HashMap<Vec<TokenId>, HashMap<TokenId, u64>> = HashMap::new();
    for doc in corpus {
        let ids = vocab.encode(doc.iter().map(|s| s.as_ref()));
        for i in 0..ids.len() {
            let ctx = context_key(&ids[..i], width);
            *raw.entry(ctx).or_default().entry(ids[i]).or_default() += 1;
        }
    }

    let contexts = raw
        .into_iter()
        .map(|(ctx, conts)| {
            let mut counts: Vec<(TokenId, u64)> = conts.into_iter().collect();
            counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            let total = counts.iter().map(|c| c.1).sum();
            (ctx, Continuations { total, counts })
        })
        .collect();

    Ok(NgramModel {
        order: config.order,
        alpha: config.alpha,
        vocab,
        contexts,
    })
}

/// Last `width` tokens of `prefix`, left-padded with the start marker.
fn context_key(prefix: &[TokenId], width: usize) -> Vec<TokenId> {
    let take = prefix.len().min(width);
    let mut key = vec![START_MARKER; width - take];
    key.extend_from_slice(&prefix[prefix.len() - take..]);
    key
}

impl NgramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn context_count(&self) -> usize {
        self.contexts.len()
    }

    fn lookup(&self, context: &[TokenId]) -> Option<&Continuations> {
        self.contexts.get(&context_key(context, self.order - 1))
    }

    /// The one place a smoothed probability is computed, so the dense and
    /// sparse routes produce identical bits.
    fn smoothed<T: Scalar>(&self, count: u64, total: u64) -> T {
        let alpha = T::of(self.alpha);
        let v = T::of_usize(self.vocab.len());
        (T::of(count as f64) + alpha) / (T::of(total as f64) + alpha * v)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            order: self.order,
            alpha: self.alpha,
            unk_id: self.vocab.unk_id(),
            tokens: self.vocab.tokens().to_vec(),
            contexts: self
                .contexts
                .iter()
                .map(|(k, c)| ContextEntry {
                    context: k.clone(),
                    counts: c.counts.clone(),
                })
                .collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Invalid(format!("unknown model format `{}`", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::Invalid(format!("unsupported model version {}", file.version)));
        }
        if file.order < 1 {
            return Err(Error::InvalidOrder(file.order));
        }
        if !(file.alpha > 0.0) {
            return Err(Error::InvalidAlpha(file.alpha));
        }
        let vocab = Vocabulary::new(file.tokens, file.unk_id)?;
        let v = vocab.len() as TokenId;
        let mut contexts = BTreeMap::new();
        for entry in file.contexts {
            if entry.context.len() != file.order - 1
                || entry.context.iter().any(|&t| t >= v && t != START_MARKER)
                || entry.counts.iter().any(|&(t, _)| t >= v)
            {
                return Err(Error::Invalid("context entry out of range".into()));
            }
            let mut counts = entry.counts;
            counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            let total = counts.iter().map(|c| c.1).sum();
            contexts.insert(entry.context, Continuations { total, counts });
        }
        Ok(NgramModel {
            order: file.order,
            alpha: file.alpha,
            vocab,
            contexts,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

impl<T: Scalar> LanguageModel<T> for NgramModel {
    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn next_distribution(&self, context: &[TokenId]) -> NextTokenDistribution<T> {
        let v = self.vocab.len();
        let mut entries = Vec::with_capacity(v);
        let (seen, total): (&[(TokenId, u64)], u64) = match self.lookup(context) {
            Some(c) => (&c.counts, c.total),
            None => (&[], 0),
        };
        entries.extend(seen.iter().map(|&(id, c)| (id, self.smoothed::<T>(c, total))));

        let mut seen_ids: Vec<TokenId> = seen.iter().map(|s| s.0).collect();
        seen_ids.sort_unstable();
        let tail: T = self.smoothed(0, total);
        let mut next_seen = seen_ids.iter().peekable();
        for id in 0..v as TokenId {
            if next_seen.peek() == Some(&&id) {
                next_seen.next();
            } else {
                entries.push((id, tail));
            }
        }
        NextTokenDistribution::from_sorted_unchecked(entries)
    }

    /// Sparse route: only walks the seen continuations plus, for an unseen
    /// token, the tail positions ahead of it. Accumulates in the same order
    /// as the dense prefix sum.
    fn score_token(&self, context: &[TokenId], token: TokenId) -> TokenRecord<T> {
        let (seen, total): (&[(TokenId, u64)], u64) = match self.lookup(context) {
            Some(c) => (&c.counts, c.total),
            None => (&[], 0),
        };
        let mut acc = T::zero();
        for (i, &(id, c)) in seen.iter().enumerate() {
            let p: T = self.smoothed(c, total);
            acc = acc + p;
            if id == token {
                return TokenRecord::new(token, i + 1, p, acc);
            }
        }
        let below = seen.iter().filter(|s| s.0 < token).count();
        let tail_pos = token as usize - below;
        let p: T = self.smoothed(0, total);
        for _ in 0..=tail_pos {
            acc = acc + p;
        }
        TokenRecord::new(token, seen.len() + tail_pos + 1, p, acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::score_document;

    fn abab() -> NgramModel {
        let corpus = vec!["a b a b a b".split(' ').collect::<Vec<_>>()];
        let config = NgramConfig {
            order: 2,
            alpha: 0.01,
            ..Default::default()
        };
        train_ngram(&corpus, &config).unwrap()
    }

    #[test]
    fn bigram_prefers_observed_continuation() {
        let m = abab();
        let v = m.vocab();
        assert_eq!(v.len(), 3);
        let (a, b, unk) = (v.id("a"), v.id("b"), v.unk_id());
        let d: NextTokenDistribution<f64> = m.next_distribution(&[a]);
        let p = |t| d.record_for(t).unwrap().prob;
        // c(a,b)=3, c(a)=3: (3+0.01)/(3+0.03) against 0.01/3.03
        assert!((p(b) - 3.01 / 3.03).abs() < 1e-12);
        assert!(p(b) > p(a) && p(b) > p(unk));
        assert_eq!(d.token_at(1), b);
    }

    #[test]
    fn unigram_degenerate_corpus() {
        let corpus = vec![vec!["x"; 10]];
        let config = NgramConfig {
            order: 1,
            ..Default::default()
        };
        let m = train_ngram(&corpus, &config).unwrap();
        let d: NextTokenDistribution<f64> = m.next_distribution(&[]);
        assert_eq!(d.token_at(1), m.vocab().id("x"));
    }

    #[test]
    fn errors() {
        let empty: Vec<Vec<&str>> = vec![];
        assert!(matches!(
            train_ngram(&empty, &NgramConfig::default()),
            Err(Error::EmptyCorpus)
        ));
        let corpus = vec![vec!["a", "b"]];
        let bad = NgramConfig {
            order: 0,
            ..Default::default()
        };
        let err = train_ngram(&corpus, &bad).unwrap_err();
        assert!(err.to_string().contains("invalid order"));
    }

    #[test]
    fn unseen_context_is_uniform() {
        let m = abab();
        let d: NextTokenDistribution<f64> = m.next_distribution(&[m.vocab().unk_id()]);
        for (i, &(id, p)) in d.entries().iter().enumerate() {
            assert_eq!(id, i as TokenId);
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sparse_scoring_matches_dense_bitwise() {
        let text = "the cat sat on the mat and the dog sat on the cat while a bird sang";
        let corpus = vec![text.split(' ').collect::<Vec<_>>()];
        for order in 1..=3 {
            let config = NgramConfig {
                order,
                alpha: 0.1,
                ..Default::default()
            };
            let m = train_ngram(&corpus, &config).unwrap();
            let ids = m.vocab().encode("the bird sat on a mat zebra the".split(' '));
            for i in 0..ids.len() {
                let dense = LanguageModel::<f64>::next_distribution(&m, &ids[..i])
                    .record_for(ids[i])
                    .unwrap();
                let sparse: TokenRecord<f64> = m.score_token(&ids[..i], ids[i]);
                assert_eq!(dense, sparse);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let m = abab();
        let back = NgramModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let ids = m.vocab().encode(["a", "b"]);
        let s1: crate::lm::DocumentScore<f64> = score_document(&m, "d", &ids).unwrap();
        let s2 = score_document(&back, "d", &ids).unwrap();
        assert_eq!(s1, s2);
    }
}
