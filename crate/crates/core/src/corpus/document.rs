use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default = "real_source")]
    pub source: String,
}

fn real_source() -> String {
    "real".to_string()
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            source: real_source(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedCorpus {
    pub documents: Vec<Document>,
    /// Entries dropped because their text was blank.
    pub skipped: usize,
}

/// Reads line-delimited JSON (`{"id":…,"text":…}` per line) or, for a
/// directory, every `.txt` file in name order with the file stem as id.
pub fn load_corpus(path: &Path) -> Result<LoadedCorpus> {
    let mut documents = Vec::new();
    let mut skipped = 0;
    let mut keep = |doc: Document| {
        if doc.text.trim().is_empty() {
            skipped += 1;
        } else {
            documents.push(doc);
        }
    };
    if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        files.sort();
        for f in files {
            let text = std::fs::read_to_string(&f).map_err(|e| Error::io(&f, e))?;
            let id = f.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            keep(Document::new(id, text));
        }
    } else {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let doc: Document =
                serde_json::from_str(&line).map_err(|e| Error::malformed(i + 1, e.to_string()))?;
            keep(doc);
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} document(s) with empty text skipped");
    }
    Ok(LoadedCorpus { documents, skipped })
}

pub fn write_corpus<W: Write>(mut out: W, docs: &[Document]) -> Result<()> {
    for d in docs {
        serde_json::to_writer(&mut out, d)?;
        out.write_all(b"\n").map_err(|e| Error::io("<corpus>", e))?;
    }
    Ok(())
}
