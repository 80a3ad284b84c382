use serde::{Deserialize, Serialize};

use super::ks::ks_statistic;
use crate::metrics::MetricTable;
use crate::Result;

/// KS distance between one metric over real text and the same metric over
/// one sampler's output. 1 means fully separated, 0 identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub sampler: String,
    pub metric: String,
    pub ks_statistic: f64,
    pub n_real: usize,
    pub n_synth: usize,
}

fn rows_for(table: &MetricTable, source: &str, column: usize) -> Vec<f64> {
    table
        .rows
        .iter()
        .filter(|r| r.source == source)
        .filter_map(|r| r.values[column])
        .collect()
}

/// One report per (sampler, scalar metric). Samplers are the `source`
/// labels found in the synthetic tables; GLTR bins are left to the
/// detector. Metrics with no values on either side are skipped.
pub fn separation_table(real: &MetricTable, synth: &[MetricTable]) -> Result<Vec<SeparationReport>> {
    let mut out = Vec::new();
    for table in synth {
        for sampler in table.sources() {
            for metric in real.scalar_columns() {
                let Some(si) = table.column_index(&metric) else {
                    continue;
                };
                let a = real.column(&metric).unwrap_or_default();
                let b = rows_for(table, &sampler, si);
                if a.is_empty() || b.is_empty() {
                    continue;
                }
                out.push(SeparationReport {
                    sampler: sampler.clone(),
                    metric,
                    ks_statistic: ks_statistic(&a, &b)?,
                    n_real: a.len(),
                    n_synth: b.len(),
                });
            }
        }
    }
    Ok(out)
}

/// Binned counts of one metric for one source, with edges shared by every
/// source so the histograms overlay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub source: String,
    pub metric: String,
    /// `counts.len() + 1` ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Equal-width histograms of `metric` for each (table, source) pair.
/// The top edge is closed.
pub fn histograms(tables: &[&MetricTable], metric: &str, n_bins: usize) -> Vec<Histogram> {
    let n_bins = n_bins.max(1);
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for t in tables {
        let Some(i) = t.column_index(metric) else {
            continue;
        };
        for source in t.sources() {
            groups.push((source.clone(), rows_for(t, &source, i)));
        }
    }
    let all = groups.iter().flat_map(|g| g.1.iter().copied());
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() || !hi.is_finite() {
        return Vec::new();
    }
    let width = (hi - lo) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins)
        .map(|i| if i == n_bins { hi } else { lo + width * i as f64 })
        .collect();
    groups
        .into_iter()
        .map(|(source, values)| {
            let mut counts = vec![0usize; n_bins];
            for v in values {
                let b = if width > 0.0 {
                    (((v - lo) / width) as usize).min(n_bins - 1)
                } else {
                    0
                };
                counts[b] += 1;
            }
            Histogram {
                source,
                metric: metric.to_string(),
                edges: edges.clone(),
                counts,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricRow;

    fn table(source: &str, a: &[f64], b: &[f64]) -> MetricTable {
        MetricTable {
            columns: vec!["rank".into(), "perplexity".into(), "gltr_bin0".into()],
            rows: a
                .iter()
                .zip(b)
                .enumerate()
                .map(|(i, (&x, &y))| MetricRow {
                    doc_id: i.to_string(),
                    source: source.into(),
                    values: vec![Some(x), Some(y), Some(0.5)],
                })
                .collect(),
        }
    }

    #[test]
    fn shape_and_constants() {
        let real = table("real", &[1.0; 5], &[2.0, 3.0, 4.0, 5.0, 6.0]);
        let s1 = table("k=40", &[3.0; 5], &[2.0, 3.0, 4.0, 5.0, 6.0]);
        let s2 = table("burst", &[1.0; 5], &[9.0; 5]);
        let rows = separation_table(&real, &[s1, s2]).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].ks_statistic, 1.0);
        assert_eq!(rows[1].ks_statistic, 0.0);
        assert_eq!(rows[2].ks_statistic, 0.0);
        assert_eq!(rows[3].ks_statistic, 1.0);
        assert!(rows.iter().all(|r| r.metric != "gltr_bin0"));
    }

    #[test]
    fn histogram_counts_sum_to_rows() {
        let real = table("real", &[1.0, 2.0, 3.0, 10.0], &[0.0; 4]);
        let synth = table("t=0.5", &[5.0, 5.0, 7.0], &[0.0; 3]);
        let h = histograms(&[&real, &synth], "rank", 4);
        assert_eq!(h.len(), 2);
        assert_eq!(h[0].counts.iter().sum::<usize>(), 4);
        assert_eq!(h[1].counts.iter().sum::<usize>(), 3);
        assert_eq!(h[0].edges, vec![1.0, 3.25, 5.5, 7.75, 10.0]);
        assert_eq!(h[0].counts, vec![3, 0, 0, 1]);
        let flat = histograms(&[&real], "perplexity", 4);
        assert_eq!(flat[0].counts, vec![4, 0, 0, 0]);
    }
}
