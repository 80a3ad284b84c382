//! Line-delimited JSON exchange format for externally computed
//! per-token probability records.
//!
//! ```text
//! {"format":"burstlab-records","version":1,"vocab_size":32000}
//! {"doc_id":"d1","records":[{"token_id":5,"rank":1,"prob":0.5,"cum_prob":0.5}, ...]}
//! ```
//!
//! `logprob` is not stored; it is recomputed as `ln(prob)` on read.

use std::io::{BufRead, BufReader, Lines, Read, Write};
use std::marker::PhantomData;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DocumentScore, TokenId, TokenRecord};
use crate::{Error, Result, Scalar};

pub const RECORDS_FORMAT: &str = "burstlab-records";
pub const RECORDS_VERSION: u32 = 1;

/// Slack allowed when checking `cum_prob ≤ 1` and `cum_prob ≥ prob`, since
/// producers accumulate in their own float order.
const SLACK: f64 = 1e-9;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    vocab_size: usize,
}

#[derive(Serialize, Deserialize)]
struct WireRecord {
    token_id: TokenId,
    rank: usize,
    prob: f64,
    cum_prob: f64,
}

#[derive(Serialize, Deserialize)]
struct WireDocument {
    doc_id: String,
    records: Vec<WireRecord>,
}

/// Streams [`DocumentScore`]s out of a records file. Each item is one
/// document; a document that violates an invariant yields an error and the
/// stream continues with the next line.
pub struct RecordReader<R, T> {
    lines: Lines<BufReader<R>>,
    line_no: usize,
    vocab_size: usize,
    _scalar: PhantomData<T>,
}

impl<T: Scalar> RecordReader<std::fs::File, T> {
    pub fn open(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::new(file)
    }
}

impl<R: Read, T: Scalar> RecordReader<R, T> {
    pub fn new(reader: R) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let first = match lines.next() {
            Some(line) => line.map_err(|e| Error::malformed(1, e.to_string()))?,
            None => return Err(Error::MissingHeader),
        };
        let header: Header = serde_json::from_str(&first).map_err(|_| Error::MissingHeader)?;
        if header.format != RECORDS_FORMAT {
            return Err(Error::MissingHeader);
        }
        if header.version != RECORDS_VERSION {
            return Err(Error::malformed(
                1,
                format!("unsupported records version {}", header.version),
            ));
        }
        if header.vocab_size < 1 {
            return Err(Error::malformed(1, "vocab_size must be positive"));
        }
        Ok(RecordReader {
            lines,
            line_no: 1,
            vocab_size: header.vocab_size,
            _scalar: PhantomData,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn parse(&self, line: &str) -> Result<DocumentScore<T>> {
        let n = self.line_no;
        let doc: WireDocument =
            serde_json::from_str(line).map_err(|e| Error::malformed(n, e.to_string()))?;
        if doc.records.is_empty() {
            return Err(Error::malformed(n, "nothing to score"));
        }
        let mut records = Vec::with_capacity(doc.records.len());
        for (i, r) in doc.records.iter().enumerate() {
            let at = |msg: &str| Error::malformed(n, format!("record {i}: {msg}"));
            if r.rank < 1 {
                return Err(at("rank must be ≥ 1"));
            }
            if r.rank > self.vocab_size {
                return Err(at("rank exceeds vocab_size"));
            }
            if r.token_id as usize >= self.vocab_size {
                return Err(at("token_id exceeds vocab_size"));
            }
            if !(0.0..=1.0).contains(&r.prob) || !r.cum_prob.is_finite() {
                return Err(at("prob must lie in [0, 1]"));
            }
            if r.cum_prob < r.prob - SLACK || r.cum_prob > 1.0 + SLACK {
                return Err(at("inconsistent record"));
            }
            records.push(TokenRecord::new(r.token_id, r.rank, T::of(r.prob), T::of(r.cum_prob)));
        }
        DocumentScore::new(doc.doc_id, records)
    }
}

impl<R: Read, T: Scalar> Iterator for RecordReader<R, T> {
    type Item = Result<DocumentScore<T>>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => return Some(Err(Error::malformed(self.line_no, e.to_string()))),
            };
            if line.trim().is_empty() {
                continue;
            }
            return Some(self.parse(&line));
        }
    }
}

/// Writes a header followed by one line per document.
pub fn write_records<'a, W, T, I>(mut out: W, vocab_size: usize, docs: I) -> Result<()>
where
    W: Write,
    T: Scalar,
    I: IntoIterator<Item = &'a DocumentScore<T>>,
{
    let header = Header {
        format: RECORDS_FORMAT.to_string(),
        version: RECORDS_VERSION,
        vocab_size,
    };
    let io = |e| Error::io("<records>", e);
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n").map_err(io)?;
    for doc in docs {
        let wire = WireDocument {
            doc_id: doc.doc_id.clone(),
            records: doc
                .records
                .iter()
                .map(|r| WireRecord {
                    token_id: r.token_id,
                    rank: r.rank,
                    prob: r.prob.as_f64(),
                    cum_prob: r.cum_prob.as_f64(),
                })
                .collect(),
        };
        serde_json::to_writer(&mut out, &wire)?;
        out.write_all(b"\n").map_err(io)?;
    }
    Ok(())
}
