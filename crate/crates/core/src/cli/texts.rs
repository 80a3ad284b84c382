use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One line of any text-bearing input: a corpus document
/// (`{"id","text"}`), a prepared pair (`{"id","prefix","full"}`), or a
/// generation (a pair plus `source` and `continuation`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextItem {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl TextItem {
    /// Whole text to score.
    pub fn body(&self) -> &str {
        self.full
            .as_deref()
            .or(self.text.as_deref())
            .unwrap_or_default()
    }
}

pub fn read_texts(path: &Path) -> Result<Vec<TextItem>> {
    if path.is_dir() {
        return Ok(crate::corpus::load_corpus(path)?
            .documents
            .into_iter()
            .map(|d| TextItem {
                id: d.id,
                source: Some(d.source),
                prefix: None,
                continuation: None,
                full: None,
                text: Some(d.text),
            })
            .collect());
    }
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item: TextItem =
            serde_json::from_str(&line).map_err(|e| Error::malformed(i + 1, e.to_string()))?;
        if item.full.is_none() && item.text.is_none() {
            return Err(Error::malformed(i + 1, "line has neither `text` nor `full`"));
        }
        out.push(item);
    }
    Ok(out)
}

pub fn write_texts<W: Write>(mut out: W, items: &[TextItem]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n").map_err(|e| Error::io("<texts>", e))?;
    }
    Ok(())
}
