use std::io::{Read, Write};
use std::path::Path;

use super::vector::MetricVector;
use crate::sampling::NucleusSpec;
use crate::{Error, Result, Scalar};

/// One CSV row: identity plus values aligned with [`MetricTable::columns`].
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub doc_id: String,
    pub source: String,
    pub values: Vec<Option<f64>>,
}

/// Metric CSV: `doc_id,source,<metric columns…>`, one row per document.
/// A missing value is an empty cell.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricTable {
    pub columns: Vec<String>,
    pub rows: Vec<MetricRow>,
}

impl MetricTable {
    pub fn from_vectors<T: Scalar>(vectors: &[MetricVector<T>]) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Ok(MetricTable::default());
        };
        let columns: Vec<String> = first.columns().into_iter().map(|c| c.0).collect();
        let mut rows = Vec::with_capacity(vectors.len());
        for v in vectors {
            let cols = v.columns();
            if cols.len() != columns.len() || cols.iter().zip(&columns).any(|(c, n)| &c.0 != n) {
                return Err(Error::Invalid(format!(
                    "metric vector `{}` has a different column set",
                    v.doc_id
                )));
            }
            rows.push(MetricRow {
                doc_id: v.doc_id.clone(),
                source: v.source.clone(),
                values: cols.into_iter().map(|c| c.1.map(Scalar::as_f64)).collect(),
            });
        }
        Ok(MetricTable { columns, rows })
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Present values of one column, in row order.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().filter_map(|r| r.values[i]).collect())
    }

    /// Every column except the per-bin GLTR fractions.
    pub fn scalar_columns(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| !c.starts_with("gltr_bin"))
            .cloned()
            .collect()
    }

    pub fn gltr_columns(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| c.starts_with("gltr_bin"))
            .cloned()
            .collect()
    }

    /// Distinct `source` labels in first-seen order.
    pub fn sources(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.source) {
                out.push(r.source.clone());
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["doc_id".to_string(), "source".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.doc_id.clone(), r.source.clone()];
            rec.extend(r.values.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers()?.clone();
        if header.len() < 2 || &header[0] != "doc_id" || &header[1] != "source" {
            return Err(Error::malformed(1, "metric table must start with doc_id,source"));
        }
        let columns: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(Error::malformed(line, "wrong number of fields"));
            }
            let values = rec
                .iter()
                .skip(2)
                .map(|cell| {
                    if cell.is_empty() {
                        Ok(None)
                    } else {
                        cell.parse::<f64>()
                            .map(Some)
                            .map_err(|_| Error::malformed(line, format!("not a number: `{cell}`")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(MetricRow {
                doc_id: rec[0].to_string(),
                source: rec[1].to_string(),
                values,
            });
        }
        Ok(MetricTable { columns, rows })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(f))
    }

    /// Rebuilds typed vectors from a table written by [`Self::from_vectors`].
    pub fn to_vectors(&self) -> Result<Vec<MetricVector<f64>>> {
        let need = |name: &str| {
            self.column_index(name)
                .ok_or_else(|| Error::Invalid(format!("missing column `{name}`")))
        };
        let fixed: Vec<usize> = [
            "log_likelihood",
            "perplexity",
            "rank",
            "log_rank",
            "k_burstiness",
            "p_burstiness",
            "top_p_burstiness",
        ]
        .iter()
        .map(|n| need(n))
        .collect::<Result<_>>()?;
        let bleu = need("self_bleu")?;
        let recov: Vec<(usize, NucleusSpec)> = self
            .columns
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.strip_prefix("recov_").map(|s| (i, s)))
            .map(|(i, s)| Ok((i, s.parse()?)))
            .collect::<Result<_>>()?;
        let gltr: Vec<usize> = self
            .gltr_columns()
            .iter()
            .map(|c| need(c))
            .collect::<Result<_>>()?;

        self.rows
            .iter()
            .enumerate()
            .map(|(n, r)| {
                let get = |i: usize| {
                    r.values[i].ok_or_else(|| {
                        Error::malformed(n + 2, format!("empty `{}`", self.columns[i]))
                    })
                };
                Ok(MetricVector {
                    doc_id: r.doc_id.clone(),
                    source: r.source.clone(),
                    log_likelihood: get(fixed[0])?,
                    perplexity: get(fixed[1])?,
                    rank: get(fixed[2])?,
                    log_rank: get(fixed[3])?,
                    k_burstiness: get(fixed[4])?,
                    p_burstiness: get(fixed[5])?,
                    top_p_burstiness: get(fixed[6])?,
                    self_bleu: r.values[bleu],
                    recoverability: recov
                        .iter()
                        .map(|&(i, s)| Ok((s, get(i)?)))
                        .collect::<Result<_>>()?,
                    gltr: gltr.iter().map(|&i| get(i)).collect::<Result<_>>()?,
                })
            })
            .collect()
    }
}
