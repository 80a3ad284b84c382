use std::collections::HashMap;

use super::TokenId;
use crate::{Error, Result};

pub const UNK_TOKEN: &str = "<unk>";

/// Whitespace word tokenizer. Case is preserved.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

/// Token universe of a model. Id 0 is always the unknown token; the rest
/// are ordered by training frequency (descending, ties lexicographic).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    unk_id: TokenId,
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    pub fn new(tokens: Vec<String>, unk_id: TokenId) -> Result<Self> {
        if tokens.len() < 2 {
            return Err(Error::Invalid(format!(
                "vocabulary needs at least 2 tokens, got {}",
                tokens.len()
            )));
        }
        if unk_id as usize >= tokens.len() {
            return Err(Error::Invalid(format!("unk id {unk_id} out of range")));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as TokenId).is_some() {
                return Err(Error::Invalid(format!("duplicate vocabulary token `{t}`")));
            }
        }
        Ok(Vocabulary {
            tokens,
            unk_id,
            index,
        })
    }

    /// Keeps at most `cap` of the most frequent tokens seen at least
    /// `min_count` times; everything else maps to `<unk>`.
    pub fn build<'a, I, D>(corpus: I, cap: usize, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = &'a str>,
    {
        let mut counts: HashMap<&'a str, u64> = HashMap::new();
        for doc in corpus {
            for tok in doc {
                *counts.entry(tok).or_default() += 1;
            }
        }
        if counts.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut ranked: Vec<(&str, u64)> = counts
            .into_iter()
            .filter(|&(t, c)| t != UNK_TOKEN && c >= min_count)
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(cap);

        let mut tokens = Vec::with_capacity(ranked.len() + 1);
        tokens.push(UNK_TOKEN.to_string());
        tokens.extend(ranked.into_iter().map(|(t, _)| t.to_string()));
        Vocabulary::new(tokens, 0)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn unk_id(&self) -> TokenId {
        self.unk_id
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> TokenId {
        self.index.get(token).copied().unwrap_or(self.unk_id)
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn encode<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> Vec<TokenId> {
        tokens.into_iter().map(|t| self.id(t)).collect()
    }

    pub fn decode(&self, ids: &[TokenId]) -> String {
        let words: Vec<&str> = ids.iter().map(|&i| self.token(i)).collect();
        words.join(" ")
    }
}
