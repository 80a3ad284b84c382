use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::{index, IndexedRandom};
use serde::{Deserialize, Serialize};

use super::Document;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefixRule {
    /// Leading fraction of the characters, backed off to a token boundary.
    Fraction(f64),
    /// Leading whitespace tokens.
    LeadingWords(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrepConfig {
    pub max_chars: usize,
    /// `None` keeps every document.
    pub subset_size: Option<usize>,
    pub prefix_rule: PrefixRule,
    /// Replace each document with one of its blank-line separated
    /// paragraphs before truncating.
    pub paragraph_mode: bool,
    pub seed: u64,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            max_chars: 2000,
            subset_size: None,
            prefix_rule: PrefixRule::Fraction(0.10),
            paragraph_mode: false,
            seed: 0,
        }
    }
}

impl PrepConfig {
    fn validate(&self) -> Result<()> {
        if self.max_chars < 1 {
            return Err(Error::Invalid("max_chars must be ≥ 1".into()));
        }
        match self.prefix_rule {
            PrefixRule::Fraction(f) if !(f > 0.0 && f < 1.0) => {
                Err(Error::Invalid(format!("prefix fraction must lie in (0, 1), got {f}")))
            }
            PrefixRule::LeadingWords(0) => Err(Error::Invalid("leading words must be ≥ 1".into())),
            _ => Ok(()),
        }
    }
}

/// A truncated sample and the leading part handed to the generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreparedPair {
    pub id: String,
    pub prefix: String,
    pub full: String,
}

/// Byte offset of the `n`-th char, or `s.len()`.
fn char_offset(s: &str, n: usize) -> usize {
    s.char_indices().nth(n).map_or(s.len(), |(i, _)| i)
}

/// Longest head of `text` of at most `limit` chars that ends on a token
/// boundary. Falls back to a hard cut when the first token alone is
/// longer than `limit`.
fn cut_at_boundary(text: &str, limit: usize) -> &str {
    let cut = char_offset(text, limit);
    if cut == text.len() {
        return text;
    }
    let head = &text[..cut];
    if text[cut..].starts_with(char::is_whitespace) {
        return head.trim_end();
    }
    match head.rfind(char::is_whitespace) {
        Some(i) => head[..i].trim_end(),
        None => head,
    }
}

/// Trimmed text of at most `max_chars` characters, never splitting a
/// whitespace token unless one token alone exceeds the limit.
pub fn truncate(text: &str, max_chars: usize) -> &str {
    cut_at_boundary(text.trim(), max_chars)
}

/// Byte end of the `n`-th whitespace token (1-based) in `text`.
fn token_end(text: &str, n: usize) -> usize {
    let mut seen = 0;
    let mut in_token = false;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if in_token {
                seen += 1;
                if seen == n {
                    return i;
                }
            }
            in_token = false;
        } else {
            in_token = true;
        }
    }
    text.len()
}

/// Prefix of an already truncated sample. Always a proper prefix ending on
/// a token boundary; a single-token sample gets an empty prefix.
pub fn prefix_of(full: &str, rule: PrefixRule) -> &str {
    let n_tokens = full.split_whitespace().count();
    if n_tokens <= 1 {
        return "";
    }
    let words = match rule {
        PrefixRule::LeadingWords(w) => w,
        PrefixRule::Fraction(f) => {
            let target = (full.chars().count() as f64 * f).floor() as usize;
            let head = cut_at_boundary(full, target);
            head.split_whitespace().count().max(1)
        }
    };
    &full[..token_end(full, words.min(n_tokens - 1))]
}

fn paragraphs(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if line.trim().is_empty() {
            let para = text[start..offset].trim();
            if !para.is_empty() {
                out.push(para);
            }
            start = offset + line.len();
        }
        offset += line.len();
    }
    let last = text[start..].trim();
    if !last.is_empty() {
        out.push(last);
    }
    out
}

/// Seeded subset, optional paragraph pick, truncation, and prefix
/// extraction. Output keeps corpus order.
pub fn prepare(docs: &[Document], config: &PrepConfig) -> Result<Vec<PreparedPair>> {
    config.validate()?;
    let chosen: Vec<usize> = match config.subset_size {
        Some(k) if k > docs.len() => {
            return Err(Error::InsufficientData(format!(
                "subset of {k} requested from {} documents",
                docs.len()
            )))
        }
        Some(k) => {
            let mut idx = index::sample(&mut rng::seeded(config.seed), docs.len(), k).into_vec();
            idx.sort_unstable();
            idx
        }
        None => (0..docs.len()).collect(),
    };
    let mut out = Vec::with_capacity(chosen.len());
    for i in chosen {
        let doc = &docs[i];
        let body = if config.paragraph_mode {
            let paras = paragraphs(&doc.text);
            let mut r = rng::stream_rng(config.seed, i as u64 + 1);
            paras.choose(&mut r).copied().unwrap_or("")
        } else {
            doc.text.as_str()
        };
        let full = truncate(body, config.max_chars);
        if full.is_empty() {
            log::warn!("document `{}` is empty after preparation; skipped", doc.id);
            continue;
        }
        out.push(PreparedPair {
            id: doc.id.clone(),
            prefix: prefix_of(full, config.prefix_rule).to_string(),
            full: full.to_string(),
        });
    }
    Ok(out)
}

pub fn write_pairs<W: Write>(mut out: W, pairs: &[PreparedPair]) -> Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n").map_err(|e| Error::io("<pairs>", e))?;
    }
    Ok(())
}

pub fn read_pairs(path: &Path) -> Result<Vec<PreparedPair>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::malformed(i + 1, e.to_string()))?);
    }
    Ok(out)
}
